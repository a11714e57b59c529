use approxvar::families::{
    factorial_sequence, localized_sequence, overshoot_limit, overshoot_sequence, shrinking_gap_sequence,
};
use approxvar::gridfn::factorial;
use approxvar::regulated::Verdict;
use approxvar::selection::{
    check_uniform_limit_sandwich, local_select, pointwise_select, verify_hypothesis, SelectionConfig,
};
use approxvar::PseudometricId;

const P0: PseudometricId = PseudometricId(0);

#[test]
fn factorial_family_diverges() {
    let rep = verify_hypothesis(&factorial_sequence(), &[0.25], &[P0], 5).unwrap();
    let c = &rep.cells[0];
    assert_eq!(c.verdict, Verdict::Diverging);
    for (j, l) in c.lowers.iter().enumerate() {
        assert!(*l >= factorial(j + 1) as f64 * 0.5 - 1e-9);
    }
    let out = pointwise_select(&factorial_sequence(), &SelectionConfig::new(vec![0.25], vec![P0], 5)).unwrap();
    assert_eq!(
        out.diagnosis().unwrap().to_string().split(':').next().unwrap(),
        "Diverging at (ε=0.25, p=0)"
    );
}

#[test]
fn shrinking_gap_certifies_constant_limit() {
    let ladder = vec![0.5, 0.25, 0.1];
    let seq = shrinking_gap_sequence(0.0, 1.0);
    let rep = verify_hypothesis(&seq, &ladder, &[P0], 48).unwrap();
    for c in &rep.cells {
        assert_eq!(c.verdict, Verdict::Bounded);
        let j0 = c.zero_from.unwrap();
        assert!(c.uppers[j0 - 1..].iter().all(|&u| u == 0.0));
    }
    let out = pointwise_select(&seq, &SelectionConfig::new(ladder, vec![P0], 48)).unwrap();
    assert!(out.is_certified());
    let t = out.trace().unwrap();
    let vals = t.limit.component(0).unwrap();
    assert!(vals.iter().all(|v| v.abs() <= 1e-12), "{vals:?}");
}

#[test]
fn overshoot_diagnosed_and_replaced_bound_fails() {
    let ladder = [0.8, 0.5, 0.2];
    let out = pointwise_select(
        &overshoot_sequence(),
        &SelectionConfig::new(ladder.to_vec(), vec![P0], 8),
    )
    .unwrap();
    let d = out.diagnosis().expect("diagnosis");
    assert_eq!(d.eps, 0.5);

    let rep = check_uniform_limit_sandwich(&overshoot_sequence(), &overshoot_limit(), &ladder, &[P0], 8).unwrap();
    assert!(rep.sandwich_holds());
    let c = rep.cell(0.5, P0).unwrap();
    assert!(c.applicable);
    assert_eq!(c.left_ok, Some(true));
    assert_eq!(c.right_ok, Some(true));
    assert!(!c.replaced_right_ok);
    assert!(c.replaced_right_excess >= 1.0 - 1e-12);
}

#[test]
fn localized_family_diverges_only_on_the_bad_window() {
    let cfg = SelectionConfig::new(vec![0.5, 0.25], vec![P0], 12);
    let local = local_select(&localized_sequence(), &[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], &cfg).unwrap();
    assert!(local.windows[0].outcome.is_certified());
    assert!(local.windows[1].outcome.is_certified());
    assert!(local.windows[2].outcome.diagnosis().is_some());
    assert_eq!(local.merged_window, Some(1));
    let first = local.windows[0].outcome.trace().unwrap();
    assert!(local.selected.iter().all(|j| first.selected.contains(j)));
}

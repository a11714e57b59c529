//! Seeded property suites comparing the library against brute-force
//! references and its own invariants. Reports hold no timings, so equal
//! seeds give byte-identical JSON.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::approxvar::{check_structural_properties, eps_variation, eps_variation_lower, Bracket};
use crate::error::{Error, Result};
use crate::families::{
    alternating_sequence, default_alternating, factorial_sequence, overshoot_limit, overshoot_sequence,
    shrinking_gap_sequence,
};
use crate::gage::{GageSpace, Point, PseudometricId, TAU_NUM};
use crate::gridfn::{jordan_variation, oscillation, uniform_distance, Grid, SampledFunction};
use crate::oracle::{finite_brute_force, lattice_tube_min, subsequence_lower_brute};
use crate::regulated::{step_approximant, Verdict};
use crate::selection::{
    check_uniform_limit_sandwich, pointwise_select, verify_hypothesis, FunctionSequence, SelectionConfig,
};

const P0: PseudometricId = PseudometricId(0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Ess,
    Unif,
    Selection,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ess" => Ok(Suite::Ess),
            "unif" => Ok(Suite::Unif),
            "selection" => Ok(Suite::Selection),
            "all" => Ok(Suite::All),
            _ => Err(Error::Config(format!(
                "unknown suite {s:?}, expected ess, unif, selection or all"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    /// Inputs of the first failure.
    pub counterexample: Option<Value>,
}

impl PropertyResult {
    fn new(suite: &'static str, name: &'static str) -> Self {
        PropertyResult {
            suite,
            name,
            checked: 0,
            failures: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, dump: impl FnOnce() -> Value) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(dump());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

pub fn run_checks(suite: Suite, seed: u64) -> Result<CheckReport> {
    let mut properties = Vec::new();
    if matches!(suite, Suite::Ess | Suite::All) {
        properties.extend(ess_suite(seed)?);
    }
    if matches!(suite, Suite::Unif | Suite::All) {
        properties.extend(unif_suite(seed)?);
    }
    if matches!(suite, Suite::Selection | Suite::All) {
        properties.extend(selection_suite(seed)?);
    }
    let passed = properties.iter().all(PropertyResult::passed);
    Ok(CheckReport {
        suite,
        seed,
        properties,
        passed,
    })
}

/// Scalar function on the integer grid `0..n` with values in `[-1, 1]`.
pub fn random_scalar(rng: &mut impl Rng, n: usize) -> SampledFunction {
    let values = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    SampledFunction::scalar_indexed(values).expect("finite values")
}

/// Points in the plane, `d_0` the distance of first coordinates and `d_1`
/// the Euclidean distance; each a pseudometric by construction.
pub fn random_finite_space(rng: &mut impl Rng, size: usize) -> GageSpace {
    let pts: Vec<(f64, f64)> = (0..size)
        .map(|_| {
            (
                (rng.random_range(0..5) as f64) * 0.5,
                (rng.random_range(0..5) as f64) * 0.5,
            )
        })
        .collect();
    let m0 = pts
        .iter()
        .map(|a| pts.iter().map(|b| (a.0 - b.0).abs()).collect())
        .collect();
    let m1 = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let names = (0..size).map(|i| format!("x{i}")).collect();
    GageSpace::finite(names, vec![m0, m1]).expect("valid pseudometrics")
}

pub fn random_finite_function(rng: &mut impl Rng, space: Arc<GageSpace>, n: usize) -> SampledFunction {
    let k = space.all_points().expect("finite").len();
    let values = (0..n).map(|_| Point::Index(rng.random_range(0..k))).collect();
    SampledFunction::new(
        Grid::new((0..n).map(|i| i as f64).collect()).expect("grid"),
        values,
        space,
    )
    .expect("valid")
}

fn dump(f: &SampledFunction) -> Value {
    json!({ "t": f.grid().points(), "values": f.values() })
}

fn witness_ok(f: &SampledFunction, p: PseudometricId, eps: f64, b: &Bracket) -> bool {
    match &b.witness {
        Some(w) => {
            uniform_distance(f, w, p).is_ok_and(|d| d <= eps)
                && jordan_variation(w, p).is_ok_and(|v| (v - b.upper.to_f64()).abs() <= TAU_NUM)
        }
        None => !b.upper.is_finite(),
    }
}

const ESS_LADDER: [f64; 3] = [0.3, 0.1, 0.05];

fn ess_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exact = PropertyResult::new("ess", "scalar_exactness");
    let mut props = PropertyResult::new("ess", "scalar_structural");
    let mut limit = PropertyResult::new("ess", "scalar_limit_c");
    let mut witness = PropertyResult::new("ess", "witness_validity");
    let mut step = PropertyResult::new("ess", "step_approximant");
    let mut bracket = PropertyResult::new("ess", "finite_bracket_soundness");
    let mut fprops = PropertyResult::new("ess", "finite_structural");

    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let f = random_scalar(&mut rng, n);
        let v = f.component(0).expect("scalar");
        for eps in ESS_LADDER {
            let b = eps_variation(&f, P0, eps)?;
            let brute = lattice_tube_min(&v, eps, 1e-3);
            let val = b.upper.to_f64();
            exact.record(
                val <= brute + TAU_NUM && brute - val <= 1e-3 * n as f64 + 1e-6,
                || json!({ "f": dump(&f), "eps": eps, "taut": val, "lattice": brute }),
            );
            witness.record(witness_ok(&f, P0, eps, &b), || json!({ "f": dump(&f), "eps": eps }));
            let s = step_approximant(&f, P0, eps)?;
            let jordan = jordan_variation(&f, P0)?;
            let max_jumps = (jordan / (2.0 * eps)).ceil() as usize;
            step.record(
                uniform_distance(&f, &s.function, P0)? <= eps
                    && s.variation.is_finite()
                    && s.variation >= val - TAU_NUM
                    && s.jumps <= max_jumps,
                || json!({ "f": dump(&f), "eps": eps, "jumps": s.jumps, "variation": s.variation }),
            );
        }
        let splits: Vec<f64> = f.grid().points()[1..n - 1].to_vec();
        let rep = check_structural_properties(&f, P0, &ESS_LADDER, &splits)?;
        props.record(rep.is_ok(), || json!({ "f": dump(&f), "violations": rep.violations }));

        let range = oscillation(&f, P0)?;
        let jordan = jordan_variation(&f, P0)?;
        if range > 0.0 {
            let tiny = 1e-6 * range;
            let val = eps_variation(&f, P0, tiny)?.upper.to_f64();
            limit.record(
                (val - jordan).abs() <= 1e-4 * jordan,
                || json!({ "f": dump(&f), "eps": tiny, "value": val, "jordan": jordan }),
            );
        }
    }

    for _ in 0..20 {
        let size = rng.random_range(2..=4);
        let space = Arc::new(random_finite_space(&mut rng, size));
        let n = rng.random_range(2..=6);
        let f = random_finite_function(&mut rng, Arc::clone(&space), n);
        let all = space.all_points().expect("finite");
        for p in [PseudometricId(0), PseudometricId(1)] {
            for eps in [0.6, 0.3] {
                let b = eps_variation(&f, p, eps)?;
                let truth = finite_brute_force(&f, p, eps, &all, 100_000).expect("small");
                let sub = subsequence_lower_brute(&f, p, eps);
                let lower = eps_variation_lower(&f, p, eps)?;
                bracket.record(
                    b.lower.to_f64() <= truth.to_f64() + TAU_NUM
                        && truth.to_f64() <= b.upper.to_f64() + TAU_NUM
                        && (lower - sub).abs() <= TAU_NUM
                        && witness_ok(&f, p, eps, &b),
                    || json!({ "f": dump(&f), "p": p, "eps": eps, "lower": b.lower, "upper": b.upper, "truth": truth }),
                );
            }
            let splits: Vec<f64> = f.grid().points()[1..n - 1].to_vec();
            let rep = check_structural_properties(&f, p, &[0.6, 0.3], &splits)?;
            fprops.record(
                rep.is_ok(),
                || json!({ "f": dump(&f), "p": p, "violations": rep.violations }),
            );
        }
    }
    Ok(vec![exact, props, limit, witness, step, bracket, fprops])
}

const UNIF_LADDER: [f64; 3] = [0.4, 0.2, 0.1];
const UNIF_PROBE: usize = 24;

/// `f_j = f + bump / j` for a random scalar `f` and bump in `[-1, 1]`.
pub fn random_convergent_family(rng: &mut impl Rng, n: usize) -> (FunctionSequence, SampledFunction) {
    let f = random_scalar(rng, n);
    let bump: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let base = f.component(0).expect("scalar");
    let seq = FunctionSequence::new("convergent", None, move |j| {
        let v = base.iter().zip(&bump).map(|(a, b)| a + b / j as f64).collect();
        SampledFunction::scalar_indexed(v)
    });
    (seq, f)
}

fn unif_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x756e_6966);
    let mut sandwich = PropertyResult::new("unif", "sandwich");
    let mut necessity = PropertyResult::new("unif", "hypothesis_necessity");
    let mut documented = PropertyResult::new("unif", "documented_failure");
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let (seq, f) = random_convergent_family(&mut rng, n);
        let rep = check_uniform_limit_sandwich(&seq, &f, &UNIF_LADDER, &[P0], UNIF_PROBE)?;
        sandwich.record(
            rep.cells.iter().all(|c| c.applicable) && rep.sandwich_holds(),
            || json!({ "f": dump(&f), "cells": rep.cells }),
        );
        let hyp = verify_hypothesis(&seq, &UNIF_LADDER, &[P0], UNIF_PROBE)?;
        necessity.record(
            hyp.cells.iter().all(|c| c.verdict == Verdict::Bounded),
            || json!({ "f": dump(&f), "cells": hyp.cells }),
        );
    }
    let rep = check_uniform_limit_sandwich(&overshoot_sequence(), &overshoot_limit(), &[0.8, 0.5, 0.2], &[P0], 8)?;
    let c = rep.cell(0.5, P0).expect("cell");
    documented.record(
        c.applicable
            && c.left_ok == Some(true)
            && c.right_ok == Some(true)
            && !c.replaced_right_ok
            && c.replaced_right_excess >= 1.0 - TAU_NUM,
        || json!({ "cell": c }),
    );
    Ok(vec![sandwich, necessity, documented])
}

fn selection_suite(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7365_6c65);
    let mut certified = PropertyResult::new("selection", "alternating_certified");
    let mut validity = PropertyResult::new("selection", "subsequence_validity");
    let mut determinism = PropertyResult::new("selection", "determinism");
    let mut shrinking = PropertyResult::new("selection", "shrinking_gap_constant_limit");
    let mut diagnosed = PropertyResult::new("selection", "diverging_families_diagnosed");

    let ladder = vec![0.5, 0.2, 0.05];
    let mut families = vec![default_alternating()];
    for _ in 0..10 {
        let n = rng.random_range(2..=10);
        let g = random_scalar(&mut rng, n);
        let h = random_scalar(&mut rng, n);
        families.push(alternating_sequence(g, h)?);
    }
    for fam in &families {
        let cfg = SelectionConfig::new(ladder.clone(), vec![P0], 8);
        let out = pointwise_select(fam, &cfg)?;
        let first = fam.member(1)?;
        let trace = out.trace();
        certified.record(
            out.is_certified()
                && trace.is_some_and(|t| t.certificates.pointwise_conv[0].distances.iter().all(|&d| d <= 1e-12)),
            || json!({ "f1": dump(&first), "outcome": &out }),
        );
        if let Some(t) = trace {
            let increasing = t.selected.windows(2).all(|w| w[0] < w[1]);
            let nested = t
                .stages
                .iter()
                .map(|s| &s.selected)
                .chain([&t.pointwise_selected, &t.selected])
                .collect::<Vec<_>>()
                .windows(2)
                .all(|w| w[1].iter().all(|j| w[0].contains(j)));
            validity.record(increasing && nested, || json!({ "selected": t.selected }));
        }
        let again = pointwise_select(fam, &cfg)?;
        determinism.record(
            serde_json::to_string(&out)? == serde_json::to_string(&again)?,
            || json!({ "f1": dump(&first) }),
        );
    }

    let ladder = [0.5, 0.25, 0.1];
    let seq = shrinking_gap_sequence(0.0, 1.0);
    let out = pointwise_select(&seq, &SelectionConfig::new(ladder.to_vec(), vec![P0], 48))?;
    let ok = out.trace().is_some_and(|t| {
        out.is_certified()
            && t.limit.component(0).expect("scalar").iter().all(|v| v.abs() <= 1e-12)
            && t.hypothesis.cells.iter().all(|c| {
                c.zero_from
                    .is_some_and(|j0| c.uppers[j0 - 1..].iter().all(|&u| u == 0.0))
            })
    });
    shrinking.record(ok, || json!({ "outcome": &out }));

    let fact = pointwise_select(&factorial_sequence(), &SelectionConfig::new(vec![0.25], vec![P0], 5))?;
    diagnosed.record(
        fact.diagnosis().is_some_and(|d| d.eps == 0.25 && d.p == P0),
        || json!({ "outcome": &fact }),
    );
    let overshoot = pointwise_select(
        &overshoot_sequence(),
        &SelectionConfig::new(vec![0.8, 0.5, 0.2], vec![P0], 8),
    )?;
    diagnosed.record(
        overshoot.diagnosis().is_some_and(|d| d.eps == 0.5),
        || json!({ "outcome": &overshoot }),
    );
    Ok(vec![certified, validity, determinism, shrinking, diagnosed])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_and_are_deterministic() {
        for suite in [Suite::Ess, Suite::Unif, Suite::Selection] {
            let rep = run_checks(suite, 1).unwrap();
            for p in &rep.properties {
                assert!(p.passed(), "{} failed: {:?}", p.name, p.counterexample);
                assert!(p.checked > 0, "{} checked nothing", p.name);
            }
        }
        let a = serde_json::to_string(&run_checks(Suite::Unif, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&run_checks(Suite::Unif, 7).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!("bogus".parse::<Suite>().is_err());
    }
}

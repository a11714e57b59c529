//! Brute-force references, independent of the fast algorithms, for small
//! inputs.

use crate::extreal::ExtReal;
use crate::gage::{Point, PseudometricId};
use crate::gridfn::SampledFunction;

/// Least `Σ |g_i - g_{i-1}|` with each `g_i` on the lattice `step · Z`
/// inside `[v_i - eps, v_i + eps]`, or at one of the two tube ends.
///
/// Exceeds the true minimum by at most `2 · step` per increment.
pub fn lattice_tube_min(values: &[f64], eps: f64, step: f64) -> f64 {
    assert!(step > 0.0 && eps > 0.0);
    let layer = |v: f64| -> Vec<f64> {
        let (lo, hi) = (v - eps, v + eps);
        let mut pts = vec![lo];
        let mut k = (lo / step).ceil() as i64;
        loop {
            let x = k as f64 * step;
            if x > hi {
                break;
            }
            if x > lo {
                pts.push(x);
            }
            k += 1;
        }
        if hi > *pts.last().expect("nonempty") {
            pts.push(hi);
        }
        pts
    };
    let mut xs = layer(values[0]);
    let mut cost = vec![0.0; xs.len()];
    for &v in &values[1..] {
        let ys = layer(v);
        cost = l1_transform(&xs, &cost, &ys);
        xs = ys;
    }
    cost.into_iter().fold(f64::INFINITY, f64::min)
}

/// `out[b] = min_a cost[a] + |ys[b] - xs[a]|` for sorted `xs`, `ys`, in two
/// sweeps.
fn l1_transform(xs: &[f64], cost: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; ys.len()];
    // from the left: min over xs[a] <= y of cost[a] - xs[a], plus y
    let mut a = 0;
    let mut best = f64::INFINITY;
    for (b, &y) in ys.iter().enumerate() {
        while a < xs.len() && xs[a] <= y {
            best = best.min(cost[a] - xs[a]);
            a += 1;
        }
        out[b] = out[b].min(best + y);
    }
    // from the right: min over xs[a] >= y of cost[a] + xs[a], minus y
    let mut a = xs.len();
    let mut best = f64::INFINITY;
    for (b, &y) in ys.iter().enumerate().rev() {
        while a > 0 && xs[a - 1] >= y {
            a -= 1;
            best = best.min(cost[a] + xs[a]);
        }
        out[b] = out[b].min(best - y);
    }
    out
}

/// Least `V_p(g)` over every assignment of `candidates` to the grid with
/// `d_p(f(t), g(t)) ≤ eps`; `+inf` when none is feasible. `None` when the
/// enumeration would exceed `limit` assignments.
pub fn finite_brute_force(
    f: &SampledFunction,
    p: PseudometricId,
    eps: f64,
    candidates: &[Point],
    limit: u64,
) -> Option<ExtReal> {
    let n = f.len();
    let k = candidates.len();
    let total = (k as u64).checked_pow(n as u32)?;
    if total > limit {
        return None;
    }
    let s = f.space();
    let feasible: Vec<Vec<bool>> = f
        .values()
        .iter()
        .map(|v| {
            candidates
                .iter()
                .map(|c| s.distance(p, v, c).expect("valid") <= eps)
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut digits = vec![0usize; n];
    'outer: for _ in 0..total {
        if digits.iter().enumerate().all(|(i, &c)| feasible[i][c]) {
            let v: f64 = digits
                .windows(2)
                .map(|w| s.distance(p, &candidates[w[0]], &candidates[w[1]]).expect("valid"))
                .sum();
            best = best.min(v);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                continue 'outer;
            }
            *d = 0;
        }
    }
    Some(if best.is_finite() {
        ExtReal::finite(best)
    } else {
        ExtReal::INFINITY
    })
}

/// Largest `Σ (d_p(f(s_i), f(s_{i-1})) - 2ε)⁺` over all index subsets.
/// Panics for more than 20 grid points.
pub fn subsequence_lower_brute(f: &SampledFunction, p: PseudometricId, eps: f64) -> f64 {
    let n = f.len();
    assert!(n <= 20, "subset enumeration limited to 20 points");
    let vals = f.values();
    let s = f.space();
    let mut best = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let v: f64 = idx
            .windows(2)
            .map(|w| (s.distance(p, &vals[w[0]], &vals[w[1]]).expect("valid") - 2.0 * eps).max(0.0))
            .sum();
        best = best.max(v);
    }
    best
}

/// Jordan variation as the supremum over all partitions by grid points.
/// Panics for more than 20 grid points.
pub fn partition_jordan(f: &SampledFunction, p: PseudometricId) -> f64 {
    let n = f.len();
    assert!(n <= 20, "subset enumeration limited to 20 points");
    let vals = f.values();
    let s = f.space();
    let mut best = 0.0f64;
    for mask in 1u32..(1u32 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let v: f64 = idx
            .windows(2)
            .map(|w| s.distance(p, &vals[w[0]], &vals[w[1]]).expect("valid"))
            .sum();
        best = best.max(v);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::gage::GageSpace;
    use crate::gridfn::{alternating_mask, gen_dirichlet, Grid};

    #[test]
    fn lattice_examples() {
        assert!((lattice_tube_min(&[0.0, 2.0, 0.0], 0.5, 1e-3) - 2.0).abs() < 1e-9);
        assert!((lattice_tube_min(&[0.0, 1.0, 2.0, 3.0], 0.5, 1e-3) - 2.0).abs() < 1e-9);
        assert_eq!(lattice_tube_min(&[0.0, 1.0, 2.0, 3.0], 2.0, 1e-3), 0.0);
        assert!((lattice_tube_min(&[0.0, 2.0, 0.0], 0.1, 1e-3) - 3.6).abs() < 1e-9);
    }

    #[test]
    fn brute_examples() {
        let space = Arc::new(GageSpace::two_point(1.0).unwrap());
        let f = gen_dirichlet(
            Grid::uniform(0.0, 1.0, 5).unwrap(),
            Point::Index(0),
            Point::Index(1),
            &alternating_mask(5),
            space,
        )
        .unwrap();
        let all = [Point::Index(0), Point::Index(1)];
        let p = PseudometricId(0);
        assert_eq!(finite_brute_force(&f, p, 0.4, &all, 1 << 10).unwrap().to_f64(), 4.0);
        assert_eq!(finite_brute_force(&f, p, 1.0, &all, 1 << 10).unwrap().to_f64(), 0.0);
        assert_eq!(
            finite_brute_force(&f, p, 0.4, &all[..1], 1 << 10).unwrap(),
            ExtReal::INFINITY
        );
        assert!(finite_brute_force(&f, p, 0.4, &all, 4).is_none());
        assert!((subsequence_lower_brute(&f, p, 0.4) - 0.8).abs() < 1e-12);
        assert_eq!(partition_jordan(&f, p), 4.0);
    }
}

//! Built-in sequences and refining families on the scalar space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gage::{GageSpace, Point};
use crate::gridfn::{
    alternating_mask, gen_dirichlet, gen_factorial_step, gen_monotone_ramp, Grid, SampledFunction, MAX_FACTORIAL_ORDER,
};
use crate::regulated::RefiningFamily;
use crate::selection::FunctionSequence;

fn scalar_space() -> Arc<GageSpace> {
    Arc::new(GageSpace::scalar())
}

/// Real Dirichlet function on `m` alternations of a uniform grid on `[0, 1]`.
fn real_dirichlet(m: usize, x: f64, y: f64) -> Result<SampledFunction> {
    gen_dirichlet(
        Grid::uniform(0.0, 1.0, m + 1)?,
        Point::Real(x),
        Point::Real(y),
        &alternating_mask(m + 1),
        scalar_space(),
    )
}

/// Dirichlet function taking `0` and `d` with `m0 · 2^k` alternations at
/// depth `k`.
pub fn dirichlet_refining(m0: usize, d: f64, depth: usize) -> RefiningFamily {
    RefiningFamily::new("dirichlet", depth, move |k| real_dirichlet(m0 << k, 0.0, d))
}

/// The ramp from `0` to `3` on `2^{k+1} + 1` uniform points of `[0, 1]`.
pub fn ramp_refining(depth: usize) -> RefiningFamily {
    RefiningFamily::new("ramp", depth, |k| {
        Ok(gen_monotone_ramp(Grid::uniform(0.0, 1.0, (2 << k) + 1)?, 0.0, 3.0))
    })
}

pub fn constant_refining(c: f64, depth: usize) -> RefiningFamily {
    RefiningFamily::new("constant", depth, move |k| {
        let n = (2 << k) + 1;
        SampledFunction::scalar(Grid::uniform(0.0, 1.0, n)?, vec![c; n])
    })
}

pub const REFINING_NAMES: &[&str] = &["dirichlet", "ramp", "constant"];

pub fn builtin_refining(name: &str, depth: usize) -> Option<RefiningFamily> {
    match name {
        "dirichlet" => Some(dirichlet_refining(4, 1.0, depth)),
        "ramp" => Some(ramp_refining(depth)),
        "constant" => Some(constant_refining(1.0, depth)),
        _ => None,
    }
}

/// `f_j = c` on 17 uniform points of `[0, 1]`.
pub fn constant_sequence(c: f64) -> FunctionSequence {
    FunctionSequence::new("constant", None, move |_| {
        SampledFunction::scalar(Grid::uniform(0.0, 1.0, 17)?, vec![c; 17])
    })
}

/// `f_j = g` for odd `j` and `h` for even `j`.
pub fn alternating_sequence(g: SampledFunction, h: SampledFunction) -> Result<FunctionSequence> {
    if !g.same_domain(&h) {
        return Err(Error::DomainMismatch);
    }
    Ok(FunctionSequence::new("alternating", None, move |j| {
        Ok(if j % 2 == 1 { g.clone() } else { h.clone() })
    }))
}

/// The default alternating pair `g(t) = t` and `h(t) = 1 - t²` on 17 points.
pub fn default_alternating() -> FunctionSequence {
    let grid = Grid::uniform(0.0, 1.0, 17).expect("valid grid");
    let g = SampledFunction::scalar(grid.clone(), grid.points().to_vec()).expect("valid");
    let h = SampledFunction::scalar(grid.clone(), grid.points().iter().map(|t| 1.0 - t * t).collect()).expect("valid");
    alternating_sequence(g, h).expect("same domain")
}

/// Dirichlet functions taking `x + 2^{-j} d` and `x - 2^{-j} d` on 48
/// alternations: uniformly convergent to the constant `x`, with
/// `V_ε(f_j) = 0` once `2^{-j} d ≤ ε`.
pub fn shrinking_gap_sequence(x: f64, d: f64) -> FunctionSequence {
    FunctionSequence::new("shrinking-gap", None, move |j| {
        let h = d * 0.5f64.powi(j as i32);
        real_dirichlet(48, x + h, x - h)
    })
}

/// Factorial steps: `0` at the multiples of `1/j!` and `1` at the midpoints
/// between them, `j = 1..=8`.
pub fn factorial_sequence() -> FunctionSequence {
    FunctionSequence::new("factorial", Some(MAX_FACTORIAL_ORDER), |j| {
        gen_factorial_step(j, true, Point::Real(0.0), Point::Real(1.0), scalar_space())
    })
}

/// Dirichlet functions taking `0` and `1 + 1/j` on 8 alternations,
/// converging uniformly to the Dirichlet function taking `0` and `1`.
/// Level `L` of member `j` has `8 · 2^L` alternations.
pub fn overshoot_sequence() -> FunctionSequence {
    FunctionSequence::new("overshoot", None, |j| real_dirichlet(8, 0.0, 1.0 + 1.0 / j as f64))
        .with_refinement(4, |j, level| real_dirichlet(8 << level, 0.0, 1.0 + 1.0 / j as f64))
}

/// Uniform limit of [`overshoot_sequence`].
pub fn overshoot_limit() -> SampledFunction {
    real_dirichlet(8, 0.0, 1.0).expect("valid grid")
}

/// On 97 uniform points of `[0, 3]`: `min(t, 1)` for odd `j` and
/// `1 - min(t, 1)` for even `j` up to `t = 2`, then `2j` alternations of
/// height 1 starting after `t = 2`. Bounded on `[0, 2]`, growing variation
/// on `[2, 3]`.
pub fn localized_sequence() -> FunctionSequence {
    FunctionSequence::new("localized", Some(16), |j| {
        let grid = Grid::uniform(0.0, 3.0, 97)?;
        let values = grid
            .points()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let base = if j % 2 == 1 { t.min(1.0) } else { 1.0 - t.min(1.0) };
                let k = i as isize - 64;
                if k >= 1 && (k as usize) <= 2 * j && k % 2 == 1 {
                    base + 1.0
                } else {
                    base
                }
            })
            .collect();
        SampledFunction::scalar(grid, values)
    })
}

pub const SEQUENCE_NAMES: &[&str] = &[
    "constant",
    "alternating",
    "shrinking-gap",
    "factorial",
    "overshoot",
    "localized",
];

pub fn builtin_sequence(name: &str) -> Option<FunctionSequence> {
    match name {
        "constant" => Some(constant_sequence(1.0)),
        "alternating" => Some(default_alternating()),
        "shrinking-gap" => Some(shrinking_gap_sequence(0.0, 1.0)),
        "factorial" => Some(factorial_sequence()),
        "overshoot" => Some(overshoot_sequence()),
        "localized" => Some(localized_sequence()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxvar::eps_variation;
    use crate::gage::PseudometricId;
    use crate::regulated::{classify_regulated, Verdict};

    const P0: PseudometricId = PseudometricId(0);

    #[test]
    fn names_resolve() {
        for n in SEQUENCE_NAMES {
            let s = builtin_sequence(n).unwrap();
            assert!(s.member(1).is_ok());
        }
        for n in REFINING_NAMES {
            assert!(builtin_refining(n, 3).unwrap().members().is_ok());
        }
        assert!(builtin_sequence("nope").is_none());
    }

    #[test]
    fn shrinking_gap_values() {
        let s = shrinking_gap_sequence(0.0, 1.0);
        // 48 alternations of gap 2^{1-j}: V_ε = 48 (2^{1-j} - 2ε)⁺
        let v = |j: usize, eps: f64| eps_variation(&s.member(j).unwrap(), P0, eps).unwrap().upper.to_f64();
        assert!((v(1, 0.25) - 24.0).abs() < 1e-9);
        assert_eq!(v(2, 0.25), 0.0);
        assert_eq!(v(4, 0.1), 0.0);
        assert!(v(3, 0.1) > 0.0);
    }

    #[test]
    fn overshoot_refinement_diverges_at_half() {
        let s = overshoot_sequence();
        for j in [1, 4, 8] {
            let rep = classify_regulated(&s.refining_family(j).unwrap(), &[0.5], &[P0]).unwrap();
            assert_eq!(rep.cells[0].verdict, Verdict::Diverging);
        }
        let rep = classify_regulated(&s.refining_family(8).unwrap(), &[0.8], &[P0]).unwrap();
        assert_eq!(rep.cells[0].verdict, Verdict::Bounded);
    }

    #[test]
    fn localized_grows_only_on_the_right() {
        let s = localized_sequence();
        for j in [1, 5, 9] {
            let f = s.member(j).unwrap();
            let left = crate::gridfn::restrict(&f, 0.0, 2.0).unwrap();
            let v = eps_variation(&left, P0, 0.25).unwrap().upper.to_f64();
            assert!((v - 0.5).abs() < 1e-9);
            let full = eps_variation(&f, P0, 0.25).unwrap().upper.to_f64();
            assert!(full > v);
        }
    }
}

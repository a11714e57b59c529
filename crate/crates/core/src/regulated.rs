//! Regulated functions at desk scale: step-function approximants witnessing
//! `V_{ε,p}(f) < ∞`, a growth classifier over refining grids flagging
//! `V_{ε,p} → ∞`, and empirical one-sided Cauchy defects.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::approxvar::{eps_variation, validate_ladder};
use crate::error::{Error, Result};
use crate::gage::{GageKind, Point, PseudometricId, TAU_NUM};
use crate::gridfn::{jordan_variation, SampledFunction};

/// Relative tolerance for a sequence of values to count as stabilized.
pub const TAU_GROWTH: f64 = 1e-6;
/// Diverging requires the last value to reach this multiple of the first.
pub const DIVERGENCE_FACTOR: f64 = 4.0;
/// Diverging requires the final slope to reach this fraction of the mean
/// slope.
pub const LINEARITY: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct StepApproximant {
    pub function: SampledFunction,
    /// Number of grid steps where the value changes.
    pub jumps: usize,
    /// `V_p` of `function`.
    pub variation: f64,
}

/// A point of `[lo, hi]` within `eps` of both ends in f64 arithmetic.
fn chebyshev_center(lo: f64, hi: f64, eps: f64) -> Option<f64> {
    let mut g = 0.5 * (lo + hi);
    for _ in 0..8 {
        let below = g - lo > eps;
        let above = hi - g > eps;
        match (below, above) {
            (false, false) => return Some(g),
            (true, true) => return None,
            (true, false) => g = g.next_down(),
            (false, true) => g = g.next_up(),
        }
    }
    None
}

/// Maximal runs `[start, end)` over which a real sequence has a common
/// center within `eps`, found greedily from the left, with that center.
fn real_runs(v: &[f64], eps: f64) -> Vec<(usize, usize, f64)> {
    let mut runs = Vec::new();
    let mut start = 0;
    while start < v.len() {
        let (mut lo, mut hi) = (v[start], v[start]);
        let mut center = v[start];
        let mut end = start + 1;
        while end < v.len() {
            match chebyshev_center(lo.min(v[end]), hi.max(v[end]), eps) {
                Some(c) => {
                    lo = lo.min(v[end]);
                    hi = hi.max(v[end]);
                    center = c;
                    end += 1;
                }
                None => break,
            }
        }
        if end == start + 1 {
            center = chebyshev_center(lo, hi, eps).expect("a single value is its own center");
        }
        runs.push((start, end, center));
        start = end;
    }
    runs
}

/// Piecewise-constant `g` with `d_p(f, g) ≤ eps` pointwise, built by
/// greedy maximal runs.
///
/// On real coordinates each run is kept while its range is at most `2ε` and
/// takes the run's center, which minimizes the number of jumps. On a finite
/// space a run is kept while some candidate is within `ε` of all its values,
/// and takes the smallest such candidate.
pub fn step_approximant(f: &SampledFunction, p: PseudometricId, eps: f64) -> Result<StepApproximant> {
    f.space().check_pseudometric(p)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidEps(eps));
    }
    let values: Vec<Point> = match f.space().kind() {
        GageKind::Scalar => {
            let v = f.component(0).expect("scalar values");
            let mut out = Vec::with_capacity(v.len());
            for (s, e, c) in real_runs(&v, eps) {
                out.extend(std::iter::repeat_n(Point::Real(c), e - s));
            }
            out
        }
        GageKind::Coordinate { .. } => {
            let v = f.component(p.0).expect("coordinate values");
            let mut out = Vec::with_capacity(v.len());
            for (s, e, c) in real_runs(&v, eps) {
                let mut base = match &f.values()[s] {
                    Point::Vector(x) => x.clone(),
                    _ => unreachable!(),
                };
                base[p.0] = c;
                out.extend(std::iter::repeat_n(Point::Vector(base), e - s));
            }
            out
        }
        GageKind::Finite { .. } => finite_runs(f, p, eps)?,
    };
    let function = f.with_values(values)?;
    let jumps = function.values().windows(2).filter(|w| w[0] != w[1]).count();
    let variation = jordan_variation(&function, p)?;
    Ok(StepApproximant {
        function,
        jumps,
        variation,
    })
}

fn finite_runs(f: &SampledFunction, p: PseudometricId, eps: f64) -> Result<Vec<Point>> {
    let s = f.space();
    let cands = s
        .candidates()
        .map(<[Point]>::to_vec)
        .or_else(|| s.all_points())
        .expect("finite spaces list their points");
    let vals = f.values();
    let covers = |i: usize| -> Vec<bool> { cands.iter().map(|c| s.d(p.0, &vals[i], c) <= eps).collect() };
    let mut out = Vec::with_capacity(vals.len());
    let mut start = 0;
    while start < vals.len() {
        let mut alive = covers(start);
        if !alive.iter().any(|&a| a) {
            return Err(Error::Infeasible { index: start });
        }
        let mut end = start + 1;
        while end < vals.len() {
            let next: Vec<bool> = alive.iter().zip(covers(end)).map(|(&a, b)| a && b).collect();
            if !next.iter().any(|&a| a) {
                break;
            }
            alive = next;
            end += 1;
        }
        let pick = alive.iter().position(|&a| a).expect("nonempty");
        out.extend(std::iter::repeat_n(cands[pick].clone(), end - start));
        start = end;
    }
    Ok(out)
}

pub type RefiningGenerator = dyn Fn(usize) -> Result<SampledFunction> + Send + Sync;

/// Samples of one function on nested grids `Grid_0 ⊂ Grid_1 ⊂ …`, standing
/// in for an interval domain. Depth `k` ranges over `0..depth`.
#[derive(Clone)]
pub struct RefiningFamily {
    pub label: String,
    pub depth: usize,
    generator: Arc<RefiningGenerator>,
}

impl std::fmt::Debug for RefiningFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RefiningFamily")
            .field("label", &self.label)
            .field("depth", &self.depth)
            .finish_non_exhaustive()
    }
}

impl RefiningFamily {
    pub fn new(
        label: impl Into<String>,
        depth: usize,
        generator: impl Fn(usize) -> Result<SampledFunction> + Send + Sync + 'static,
    ) -> Self {
        RefiningFamily {
            label: label.into(),
            depth,
            generator: Arc::new(generator),
        }
    }

    pub fn member(&self, k: usize) -> Result<SampledFunction> {
        (self.generator)(k)
    }

    /// All members, checked to be nested, strictly growing and on one space.
    pub fn members(&self) -> Result<Vec<SampledFunction>> {
        let members = (0..self.depth).map(|k| self.member(k)).collect::<Result<Vec<_>>>()?;
        for (k, w) in members.windows(2).enumerate() {
            if w[0].space() != w[1].space() {
                return Err(Error::Config(format!(
                    "family {}: depths {k} and {} use different spaces",
                    self.label,
                    k + 1
                )));
            }
            if w[0].len() >= w[1].len() || !w[0].grid().is_subset_of(w[1].grid()) {
                return Err(Error::Config(format!(
                    "family {}: grid at depth {} does not strictly refine depth {k}",
                    self.label,
                    k + 1
                )));
            }
        }
        Ok(members)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthCell {
    pub eps: f64,
    pub p: PseudometricId,
    /// Grid size at each depth.
    pub sizes: Vec<usize>,
    pub lowers: Vec<f64>,
    pub uppers: Vec<f64>,
    pub verdict: Verdict,
    /// Least-squares slope of the lower bounds against grid size over the
    /// last three depths; the divergence rate estimate.
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub label: String,
    pub cells: Vec<GrowthCell>,
}

impl GrowthReport {
    pub fn cell(&self, eps: f64, p: PseudometricId) -> Option<&GrowthCell> {
        self.cells.iter().find(|c| c.eps == eps && c.p == p)
    }

    pub fn any_diverging(&self) -> bool {
        self.cells.iter().any(|c| c.verdict == Verdict::Diverging)
    }
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Least-squares slope over the last three points, and whether the values
/// grow at least linearly: strictly increasing, last at least
/// [`DIVERGENCE_FACTOR`] times the first, and a final slope of at least
/// [`LINEARITY`] times the mean slope over the whole range, which is
/// positive. Convergent sequences fail the last condition as they flatten.
pub(crate) fn growth(xs: &[f64], lowers: &[f64]) -> (f64, bool) {
    let k = xs.len();
    debug_assert!(k >= 3 && lowers.len() == k);
    let slope = ls_slope(&xs[k - 3..], &lowers[k - 3..]);
    let (first, last) = (lowers[0], lowers[k - 1]);
    let mean = (last - first) / (xs[k - 1] - xs[0]);
    let diverging = lowers.windows(2).all(|w| w[1] > w[0])
        && last >= DIVERGENCE_FACTOR * first
        && mean > 0.0
        && slope >= LINEARITY * mean;
    (slope, diverging)
}

/// The last three values agree with the last one within [`TAU_GROWTH`]
/// relative (plus [`TAU_NUM`] absolute). Infinite values never stabilize.
pub(crate) fn is_stable(values: &[f64]) -> bool {
    if values.len() < 3 {
        return false;
    }
    let tail = &values[values.len() - 3..];
    let last = tail[2];
    last.is_finite()
        && tail
            .iter()
            .all(|v| (v - last).abs() <= TAU_GROWTH * last.abs() + TAU_NUM)
}

/// Classifies `V_{ε,p}` along a refining family for every `(ε, p)`.
///
/// Divergence is judged on lower bounds only, which makes it sound; a
/// Bounded verdict needs the upper bounds to stabilize.
pub fn classify_regulated(family: &RefiningFamily, eps_ladder: &[f64], ps: &[PseudometricId]) -> Result<GrowthReport> {
    if family.depth < 3 {
        return Err(Error::Config(format!(
            "refining family needs depth >= 3, got {}",
            family.depth
        )));
    }
    validate_ladder(eps_ladder)?;
    let members = family.members()?;
    for &p in ps {
        members[0].space().check_pseudometric(p)?;
    }
    let sizes: Vec<usize> = members.iter().map(SampledFunction::len).collect();
    let cells_in: Vec<(f64, PseudometricId)> = eps_ladder
        .iter()
        .flat_map(|&e| ps.iter().map(move |&p| (e, p)))
        .collect();
    let cells = cells_in
        .par_iter()
        .map(|&(eps, p)| {
            let brackets = members
                .iter()
                .map(|f| eps_variation(f, p, eps))
                .collect::<Result<Vec<_>>>()?;
            let lowers: Vec<f64> = brackets.iter().map(|b| b.lower.to_f64()).collect();
            let uppers: Vec<f64> = brackets.iter().map(|b| b.upper.to_f64()).collect();
            let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
            let (slope, diverging) = growth(&xs, &lowers);
            let verdict = if diverging {
                Verdict::Diverging
            } else if is_stable(&uppers) {
                Verdict::Bounded
            } else {
                Verdict::Inconclusive
            };
            Ok(GrowthCell {
                eps,
                p,
                sizes: sizes.clone(),
                lowers,
                uppers,
                verdict,
                slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthReport {
        label: family.label.clone(),
        cells,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Largest `d_p(f(s), f(t))` over grid points `s, t` in the open window
/// `(tau - window, tau)` (left) or `(tau, tau + window)` (right).
pub fn cauchy_defect(f: &SampledFunction, p: PseudometricId, tau: f64, window: f64, side: Side) -> Result<f64> {
    f.space().check_pseudometric(p)?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Config(format!("window must be positive, got {window}")));
    }
    let g = f.grid();
    if !(tau >= g.first() && tau <= g.last()) {
        return Err(Error::Config(format!(
            "tau = {tau} outside the grid range [{}, {}]",
            g.first(),
            g.last()
        )));
    }
    let (lo, hi) = match side {
        Side::Left => (tau - window, tau),
        Side::Right => (tau, tau + window),
    };
    let idx: Vec<usize> = (0..f.len())
        .filter(|&i| {
            let t = g.points()[i];
            t > lo && t < hi
        })
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let vals = f.values();
    let mut best = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            best = best.max(f.space().d(p.0, &vals[i], &vals[j]));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approxvar::eps_variation_lower;
    use crate::gage::GageSpace;
    use crate::gridfn::{alternating_mask, gen_dirichlet, gen_monotone_ramp, uniform_distance, Grid};

    const P0: PseudometricId = PseudometricId(0);

    fn sf(v: &[f64]) -> SampledFunction {
        SampledFunction::scalar_indexed(v.to_vec()).unwrap()
    }

    #[test]
    fn step_examples() {
        let s = step_approximant(&sf(&[0.0, 1.0, 2.0, 3.0]), P0, 0.5).unwrap();
        assert_eq!(s.function.component(0).unwrap(), vec![0.5, 0.5, 2.5, 2.5]);
        assert_eq!(s.jumps, 1);
        assert_eq!(s.variation, 2.0);

        let s = step_approximant(&sf(&[4.0, 4.0, 4.0]), P0, 0.1).unwrap();
        assert_eq!(s.function.component(0).unwrap(), vec![4.0; 3]);
        assert_eq!(s.jumps, 0);

        let s = step_approximant(&sf(&[0.0, 2.0, 0.0]), P0, 1.0).unwrap();
        assert_eq!(s.function.component(0).unwrap(), vec![1.0; 3]);
        assert_eq!(s.jumps, 0);
    }

    #[test]
    fn step_is_feasible_under_rounding() {
        let f = sf(&[0.1, 0.7, 0.3, 1.3, -0.2]);
        for eps in [0.3, 0.1, 0.25] {
            let s = step_approximant(&f, P0, eps).unwrap();
            assert!(uniform_distance(&f, &s.function, P0).unwrap() <= eps);
            let exact = eps_variation(&f, P0, eps).unwrap().upper.to_f64();
            assert!(exact <= s.variation + TAU_NUM);
        }
    }

    #[test]
    fn finite_step_and_infeasible() {
        let space = Arc::new(GageSpace::two_point(1.0).unwrap());
        let f = gen_dirichlet(
            Grid::uniform(0.0, 1.0, 4).unwrap(),
            Point::Index(0),
            Point::Index(1),
            &alternating_mask(4),
            Arc::clone(&space),
        )
        .unwrap();
        let s = step_approximant(&f, P0, 1.0).unwrap();
        assert_eq!(s.jumps, 0);
        assert!(s.function.values().iter().all(|v| *v == Point::Index(0)));
        let s = step_approximant(&f, P0, 0.5).unwrap();
        assert_eq!(s.jumps, 3);

        let restricted = Arc::new(
            GageSpace::two_point(1.0)
                .unwrap()
                .with_candidates(vec![Point::Index(0)])
                .unwrap(),
        );
        let g = SampledFunction::new(f.grid().clone(), f.values().to_vec(), restricted).unwrap();
        assert!(matches!(
            step_approximant(&g, P0, 0.5),
            Err(Error::Infeasible { index: 1 })
        ));
    }

    fn dirichlet_family() -> RefiningFamily {
        RefiningFamily::new("dirichlet", 4, |k| {
            let n = 4 * (1 << k) + 1;
            gen_dirichlet(
                Grid::uniform(0.0, 1.0, n)?,
                Point::Real(0.0),
                Point::Real(1.0),
                &alternating_mask(n),
                Arc::new(GageSpace::scalar()),
            )
        })
    }

    #[test]
    fn classify_examples() {
        let rep = classify_regulated(&dirichlet_family(), &[0.4], &[P0]).unwrap();
        let c = &rep.cells[0];
        assert_eq!(c.verdict, Verdict::Diverging);
        assert!((c.slope - 0.2).abs() < 1e-9, "{}", c.slope);

        let ramp = RefiningFamily::new("ramp", 4, |k| {
            Ok(gen_monotone_ramp(Grid::uniform(0.0, 1.0, 2 * (1 << k) + 1)?, 0.0, 3.0))
        });
        let rep = classify_regulated(&ramp, &[1.0, 0.5, 0.1], &[P0]).unwrap();
        assert!(rep.cells.iter().all(|c| c.verdict == Verdict::Bounded));
        assert!((rep.cells[1].uppers[3] - 2.0).abs() < 1e-9);

        let konst = RefiningFamily::new("constant", 3, |k| {
            let n = (1 << k) + 1;
            SampledFunction::scalar(Grid::uniform(0.0, 1.0, n)?, vec![1.0; n])
        });
        let rep = classify_regulated(&konst, &[0.1], &[P0]).unwrap();
        assert_eq!(rep.cells[0].verdict, Verdict::Bounded);
        assert_eq!(rep.cells[0].lowers, vec![0.0; 3]);
    }

    #[test]
    fn classify_rejects_shallow_or_unnested() {
        let shallow = RefiningFamily::new("x", 2, |_| Ok(sf(&[0.0])));
        assert!(classify_regulated(&shallow, &[0.1], &[P0]).is_err());
        let flat = RefiningFamily::new("x", 3, |_| Ok(sf(&[0.0, 1.0])));
        assert!(classify_regulated(&flat, &[0.1], &[P0]).is_err());
        let failing = RefiningFamily::new("x", 3, |_| Err(Error::EmptyGrid));
        assert!(matches!(
            classify_regulated(&failing, &[0.1], &[P0]),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn dirichlet_lower_bound_is_achieved() {
        for m in [4usize, 8, 16] {
            let f = gen_dirichlet(
                Grid::uniform(0.0, 1.0, m + 1).unwrap(),
                Point::Real(0.0),
                Point::Real(1.0),
                &alternating_mask(m + 1),
                Arc::new(GageSpace::scalar()),
            )
            .unwrap();
            let lower = eps_variation_lower(&f, P0, 0.4).unwrap();
            assert!((lower - m as f64 * 0.2).abs() <= 1e-9);
        }
    }

    #[test]
    fn cauchy_examples() {
        let c = SampledFunction::scalar(Grid::uniform(0.0, 1.0, 11).unwrap(), vec![2.0; 11]).unwrap();
        assert_eq!(cauchy_defect(&c, P0, 0.5, 0.3, Side::Left).unwrap(), 0.0);

        let n = 101;
        let d = gen_dirichlet(
            Grid::uniform(0.0, 1.0, n).unwrap(),
            Point::Real(0.0),
            Point::Real(1.0),
            &alternating_mask(n),
            Arc::new(GageSpace::scalar()),
        )
        .unwrap();
        for side in [Side::Left, Side::Right] {
            assert_eq!(cauchy_defect(&d, P0, 0.5, 0.05, side).unwrap(), 1.0);
        }

        let ramp = gen_monotone_ramp(Grid::uniform(0.0, 1.0, 1001).unwrap(), 0.0, 1.0);
        let wide = cauchy_defect(&ramp, P0, 0.5, 0.1, Side::Left).unwrap();
        let narrow = cauchy_defect(&ramp, P0, 0.5, 0.01, Side::Left).unwrap();
        assert!(narrow < wide && narrow < 0.011);

        assert!(matches!(
            cauchy_defect(&c, P0, 0.5, 0.01, Side::Right),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(cauchy_defect(&c, P0, 2.0, 0.1, Side::Left).is_err());
    }
}

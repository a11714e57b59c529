//! The approximate variation `V_{ε,p}(f, T)`: the least Jordan variation of a
//! function `g` staying within uniform `d_p`-distance `ε` of `f`.
//!
//! Scalar and coordinate spaces are solved exactly by the taut string. A
//! finite space gets a certified [`Bracket`]: a subsequence lower bound and a
//! layered-graph shortest path over candidate values as upper bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::gage::{GageKind, Point, PseudometricId, TAU_NUM};
use crate::gridfn::{jordan_variation, oscillation, SampledFunction};

/// Certified enclosure of `V_{ε,p}(f, T)`.
#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub lower: ExtReal,
    pub upper: ExtReal,
    pub exact: bool,
    /// A function attaining `upper`, when it is finite.
    #[serde(skip)]
    pub witness: Option<SampledFunction>,
}

impl Bracket {
    fn exact(value: f64, witness: SampledFunction) -> Self {
        let v = ExtReal::from_nonneg(value);
        Bracket {
            lower: v,
            upper: v,
            exact: true,
            witness: Some(witness),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper.to_f64() - self.lower.to_f64()
    }

    /// The value when the bracket is exact.
    pub fn value(&self) -> Option<f64> {
        self.exact.then(|| self.upper.to_f64())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidEps(eps))
    }
}

/// Result of walking a taut string through the tube `[c_i - ε, c_i + ε]`.
#[derive(Clone, Debug)]
pub(crate) struct TautString {
    pub value: f64,
    /// Minimal variation on each prefix of the tube.
    pub prefix: Vec<f64>,
    pub path: Vec<f64>,
}

/// Minimal total variation of a real sequence confined to the closed tube
/// of radius `eps` around `center`.
///
/// The forward pass keeps the window `[lo, hi]` of levels reachable at the
/// current minimal cost: the minorant and majorant strings. The window
/// shrinks while tubes overlap and collapses onto the violated tube edge,
/// paying the gap, when they do not. The backward pass pulls the string
/// taut by projecting onto each window.
pub(crate) fn taut_string(center: &[f64], eps: f64) -> TautString {
    let n = center.len();
    let mut lo_w = Vec::with_capacity(n);
    let mut hi_w = Vec::with_capacity(n);
    let mut prefix = Vec::with_capacity(n);
    let (mut lo, mut hi) = (center[0] - eps, center[0] + eps);
    let mut cost = 0.0;
    lo_w.push(lo);
    hi_w.push(hi);
    prefix.push(0.0);
    for &c in &center[1..] {
        let (l, u) = (c - eps, c + eps);
        if l > hi {
            cost += l - hi;
            lo = l;
            hi = l;
        } else if u < lo {
            cost += lo - u;
            lo = u;
            hi = u;
        } else {
            lo = lo.max(l);
            hi = hi.min(u);
        }
        lo_w.push(lo);
        hi_w.push(hi);
        prefix.push(cost);
    }
    let mut path = vec![0.0; n];
    path[n - 1] = 0.5 * (lo_w[n - 1] + hi_w[n - 1]);
    for i in (0..n - 1).rev() {
        path[i] = path[i + 1].clamp(lo_w[i], hi_w[i]);
    }
    // `c ± eps` is rounded; pull by ulps so that `|g - c| <= eps` holds in f64.
    for (g, &c) in path.iter_mut().zip(center) {
        while (*g - c).abs() > eps {
            *g = if *g > c { g.next_down() } else { g.next_up() };
        }
    }
    TautString {
        value: cost,
        prefix,
        path,
    }
}

/// Exact `V_ε(f)` for a real-valued `f`, with a minimizing witness.
pub fn eps_variation_scalar(f: &SampledFunction, eps: f64) -> Result<Bracket> {
    if !f.space().is_scalar() {
        return Err(Error::NotScalar);
    }
    check_eps(eps)?;
    let center = f.component(0).expect("scalar values");
    let ts = taut_string(&center, eps);
    let witness = f.with_values(ts.path.into_iter().map(Point::Real).collect())?;
    Ok(Bracket::exact(ts.value, witness))
}

/// Coordinate gage: `d_p` and `V_p` only see coordinate `p`, so the problem
/// is the scalar one on that coordinate. The witness keeps the other
/// coordinates of `f`.
fn eps_variation_coordinate(f: &SampledFunction, p: usize, eps: f64) -> Result<(TautString, SampledFunction)> {
    let center = f.component(p).expect("coordinate values");
    let ts = taut_string(&center, eps);
    let values = f
        .values()
        .iter()
        .zip(&ts.path)
        .map(|(v, &g)| match v {
            Point::Vector(c) => {
                let mut c = c.clone();
                c[p] = g;
                Point::Vector(c)
            }
            _ => unreachable!(),
        })
        .collect();
    let witness = f.with_values(values)?;
    Ok((ts, witness))
}

/// Largest `Σ (d_p(f(s_i), f(s_{i-1})) - 2ε)⁺` over increasing index
/// subsequences `s_0 < … < s_m`.
///
/// Every `g` in the ε-tube satisfies `d_p(g(s), g(t)) ≥ d_p(f(s), f(t)) - 2ε`,
/// so this is a lower bound for `V_{ε,p}(f)`. Quadratic in the grid size.
pub fn eps_variation_lower(f: &SampledFunction, p: PseudometricId, eps: f64) -> Result<f64> {
    f.space().check_pseudometric(p)?;
    check_eps(eps)?;
    let vals = f.values();
    let s = f.space();
    let n = vals.len();
    let mut best = vec![0.0f64; n];
    let mut overall = 0.0f64;
    for j in 1..n {
        let mut b = 0.0f64;
        for i in 0..j {
            let gain = (s.d(p.0, &vals[i], &vals[j]) - 2.0 * eps).max(0.0);
            b = b.max(best[i] + gain);
        }
        best[j] = b;
        overall = overall.max(b);
    }
    Ok(overall)
}

/// Shortest path through the layered graph of feasible candidates.
#[derive(Clone, Debug)]
pub struct CandidatePath {
    /// `+inf` when some grid point has no candidate within `ε`.
    pub upper: ExtReal,
    /// Optimal value on each prefix of the grid.
    pub prefix: Vec<ExtReal>,
    pub witness: Option<SampledFunction>,
}

/// Least `V_p(g)` over `g` with values in `candidates` and
/// `d_p(f(t), g(t)) ≤ ε` at every grid point. Ties go to the smallest
/// candidate index.
pub fn eps_variation_upper_dp(
    f: &SampledFunction,
    p: PseudometricId,
    eps: f64,
    candidates: &[Point],
) -> Result<CandidatePath> {
    let s = f.space();
    s.check_pseudometric(p)?;
    check_eps(eps)?;
    if candidates.is_empty() {
        return Err(Error::Config("candidate list is empty".into()));
    }
    for c in candidates {
        s.validate_point(c)?;
    }
    let vals = f.values();
    let n = vals.len();
    let k = candidates.len();
    let feasible = |i: usize, c: usize| s.d(p.0, &vals[i], &candidates[c]) <= eps;

    let mut prefix = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n * k];
    let mut dist: Vec<f64> = (0..k)
        .map(|c| if feasible(0, c) { 0.0 } else { f64::INFINITY })
        .collect();
    let layer_min = |d: &[f64]| d.iter().copied().fold(f64::INFINITY, f64::min);
    prefix.push(ExtReal::from_nonneg(layer_min(&dist)));
    let mut next = vec![f64::INFINITY; k];
    for i in 1..n {
        for c2 in 0..k {
            next[c2] = f64::INFINITY;
            if !feasible(i, c2) {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for c1 in 0..k {
                if dist[c1].is_finite() {
                    let v = dist[c1] + s.d(p.0, &candidates[c1], &candidates[c2]);
                    if v < best {
                        best = v;
                        arg = c1;
                    }
                }
            }
            next[c2] = best;
            parent[i * k + c2] = arg;
        }
        std::mem::swap(&mut dist, &mut next);
        prefix.push(ExtReal::from_nonneg(layer_min(&dist)));
    }
    let mut end = usize::MAX;
    let mut best = f64::INFINITY;
    for (c, &d) in dist.iter().enumerate() {
        if d < best {
            best = d;
            end = c;
        }
    }
    if !best.is_finite() {
        return Ok(CandidatePath {
            upper: ExtReal::INFINITY,
            prefix,
            witness: None,
        });
    }
    let mut chosen = vec![0usize; n];
    chosen[n - 1] = end;
    for i in (1..n).rev() {
        chosen[i - 1] = parent[i * k + chosen[i]];
    }
    let witness = f.with_values(chosen.iter().map(|&c| candidates[c].clone()).collect())?;
    Ok(CandidatePath {
        upper: ExtReal::from_nonneg(best),
        prefix,
        witness: Some(witness),
    })
}

/// Candidate values used for the upper bound when the space does not list
/// its own: every point of a finite space; otherwise the observed values of
/// `f`, plus, on a coordinate gage, the per-coordinate taut-string paths
/// recombined into points.
pub fn default_candidates(f: &SampledFunction, eps: f64) -> Vec<Point> {
    if let Some(c) = f.space().candidates() {
        return c.to_vec();
    }
    if let Some(all) = f.space().all_points() {
        return all;
    }
    let mut out: Vec<Point> = Vec::new();
    let mut push = |x: Point| {
        if !out.contains(&x) {
            out.push(x);
        }
    };
    for v in f.values() {
        push(v.clone());
    }
    if let GageKind::Coordinate { dim } = f.space().kind() {
        let paths: Vec<Vec<f64>> = (0..*dim)
            .map(|q| taut_string(&f.component(q).expect("coordinates"), eps).path)
            .collect();
        for i in 0..f.len() {
            push(Point::Vector(paths.iter().map(|path| path[i]).collect()));
        }
    }
    out
}

/// `V_{ε,p}(f, T)` as a bracket: exact for scalar and coordinate spaces,
/// `[subsequence bound, candidate path]` otherwise.
pub fn eps_variation(f: &SampledFunction, p: PseudometricId, eps: f64) -> Result<Bracket> {
    f.space().check_pseudometric(p)?;
    check_eps(eps)?;
    match f.space().kind() {
        GageKind::Scalar => eps_variation_scalar(f, eps),
        GageKind::Coordinate { .. } => {
            let (ts, witness) = eps_variation_coordinate(f, p.0, eps)?;
            Ok(Bracket::exact(ts.value, witness))
        }
        GageKind::Finite { .. } => {
            let lower = eps_variation_lower(f, p, eps)?;
            let path = eps_variation_upper_dp(f, p, eps, &default_candidates(f, eps))?;
            let upper = path.upper;
            let lower = ExtReal::from_nonneg(lower.min(upper.to_f64()));
            let exact = upper.is_finite() && upper.to_f64() - lower.to_f64() <= TAU_NUM;
            Ok(Bracket {
                lower,
                upper,
                exact,
                witness: path.witness,
            })
        }
    }
}

/// `t_i ↦ V_{ε,p}(f, T ∩ (-inf, t_i])`, nondecreasing in `i`. Exact for
/// scalar and coordinate spaces, the candidate-path upper bound otherwise.
pub fn prefix_eps_variation(f: &SampledFunction, p: PseudometricId, eps: f64) -> Result<Vec<ExtReal>> {
    f.space().check_pseudometric(p)?;
    check_eps(eps)?;
    match f.space().kind() {
        GageKind::Scalar | GageKind::Coordinate { .. } => {
            let center = f.component(p.0).expect("real coordinates");
            Ok(taut_string(&center, eps)
                .prefix
                .into_iter()
                .map(ExtReal::from_nonneg)
                .collect())
        }
        GageKind::Finite { .. } => Ok(eps_variation_upper_dp(f, p, eps, &default_candidates(f, eps))?.prefix),
    }
}

/// Brackets of `V_{ε,p}(f)` along a strictly decreasing ladder of ε.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    pub p: PseudometricId,
    pub eps_ladder: Vec<f64>,
    pub brackets: Vec<Bracket>,
}

impl Profile {
    /// Both bounds nondecreasing as ε decreases, up to [`TAU_NUM`].
    pub fn is_monotone(&self) -> bool {
        self.brackets.windows(2).all(|w| {
            w[0].upper.to_f64() <= w[1].upper.to_f64() + TAU_NUM && w[0].lower.to_f64() <= w[1].lower.to_f64() + TAU_NUM
        })
    }

    pub fn uppers(&self) -> Vec<f64> {
        self.brackets.iter().map(|b| b.upper.to_f64()).collect()
    }

    pub fn lowers(&self) -> Vec<f64> {
        self.brackets.iter().map(|b| b.lower.to_f64()).collect()
    }
}

pub fn validate_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::BadLadder("ladder is empty".into()));
    }
    if let Some(e) = ladder.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::BadLadder(format!("{e} is not a positive finite number")));
    }
    if let Some(w) = ladder.windows(2).find(|w| w[0] <= w[1]) {
        return Err(Error::BadLadder(format!(
            "ladder must strictly decrease, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Evaluated in parallel over the ladder; the result does not depend on the
/// thread count.
pub fn profile(f: &SampledFunction, p: PseudometricId, eps_ladder: &[f64]) -> Result<Profile> {
    f.space().check_pseudometric(p)?;
    validate_ladder(eps_ladder)?;
    let brackets = eps_ladder
        .par_iter()
        .map(|&e| eps_variation(f, p, e))
        .collect::<Result<Vec<_>>>()?;
    let prof = Profile {
        p,
        eps_ladder: eps_ladder.to_vec(),
        brackets,
    };
    debug_assert!(prof.is_monotone(), "profile must be nonincreasing in eps");
    Ok(prof)
}

/// Value of `V_{ε,p}` for the Dirichlet function taking two values at
/// distance `d` on a whole interval.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirichletCase {
    Infinite,
    Zero,
    /// `d/2 ≤ ε < d` in a space without midpoints.
    Indeterminate,
}

pub fn dirichlet_closed_form(d: f64, eps: f64, normed: bool) -> Result<DirichletCase> {
    check_eps(eps)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Config(format!("distance must be positive, got {d}")));
    }
    Ok(if eps < d / 2.0 {
        DirichletCase::Infinite
    } else if eps >= d || normed {
        DirichletCase::Zero
    } else {
        DirichletCase::Indeterminate
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralProperty {
    /// Nonincreasing in ε.
    MonotoneInEps,
    /// Nondecreasing under enlarging the domain.
    MonotoneUnderRestriction,
    /// Tends to the Jordan variation as ε → 0.
    LimitIsVariation,
    /// Oscillation at most `V_ε + 2ε`.
    OscillationBound,
    /// Additive over a split point up to `2ε`.
    SplitAdditivity,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructuralViolation {
    pub property: StructuralProperty,
    pub eps: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StructuralReport {
    pub checked: usize,
    pub violations: Vec<StructuralViolation>,
    /// Informational findings that are not violations, e.g. a bracket too
    /// wide to confirm a bound from its lower side.
    pub notes: Vec<String>,
}

impl StructuralReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, property: StructuralProperty, eps: f64, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(StructuralViolation {
                property,
                eps,
                detail: detail(),
            });
        }
    }
}

/// Checks the structural properties in [`StructuralProperty`] of the approximate variation on
/// `f`, bracket-aware where values are not exact. `split_points` must be
/// grid points.
///
/// For the limit property the tolerance is `2 ε_min (n - 1)`: moving each value by at most
/// `ε` changes each increment by at most `2ε`.
pub fn check_structural_properties(
    f: &SampledFunction,
    p: PseudometricId,
    eps_ladder: &[f64],
    split_points: &[f64],
) -> Result<StructuralReport> {
    f.space().check_pseudometric(p)?;
    validate_ladder(eps_ladder)?;
    let splits = split_points
        .iter()
        .map(|&t| f.grid().position(t).ok_or(Error::NotAGridPoint(t)))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = StructuralReport::default();
    let prof = profile(f, p, eps_ladder)?;
    let jordan = jordan_variation(f, p)?;
    let osc = oscillation(f, p)?;
    let n = f.len();

    // monotone in eps
    for (w, e) in prof.brackets.windows(2).zip(&eps_ladder[1..]) {
        let (big, small) = (&w[0], &w[1]);
        rep.check(
            big.upper.to_f64() <= small.upper.to_f64() + TAU_NUM
                && big.lower.to_f64() <= small.lower.to_f64() + TAU_NUM,
            StructuralProperty::MonotoneInEps,
            *e,
            || {
                format!(
                    "coarser eps gives [{}, {}], finer gives [{}, {}]",
                    big.lower, big.upper, small.lower, small.upper
                )
            },
        );
    }

    for (&eps, full) in eps_ladder.iter().zip(&prof.brackets) {
        // restriction and split additivity
        for &i in &splits {
            let pre = eps_variation(&f.prefix(i), p, eps)?;
            let suf = eps_variation(&f.suffix(i), p, eps)?;
            for (name, part) in [("prefix", &pre), ("suffix", &suf)] {
                rep.check(
                    part.lower.to_f64() <= full.upper.to_f64() + TAU_NUM,
                    StructuralProperty::MonotoneUnderRestriction,
                    eps,
                    || format!("{name} at index {i}: lower {} > full upper {}", part.lower, full.upper),
                );
            }
            let sum_lo = pre.lower.to_f64() + suf.lower.to_f64();
            let sum_hi = pre.upper.to_f64() + suf.upper.to_f64();
            rep.check(
                sum_lo <= full.upper.to_f64() + TAU_NUM,
                StructuralProperty::SplitAdditivity,
                eps,
                || format!("split {i}: V(pre) + V(suf) = {sum_lo} > V(full) = {}", full.upper),
            );
            rep.check(
                full.lower.to_f64() <= sum_hi + 2.0 * eps + TAU_NUM,
                StructuralProperty::SplitAdditivity,
                eps,
                || {
                    format!(
                        "split {i}: V(full) = {} > V(pre) + V(suf) + 2eps = {}",
                        full.lower,
                        sum_hi + 2.0 * eps
                    )
                },
            );
        }

        // oscillation bound
        rep.check(
            osc <= full.upper.to_f64() + 2.0 * eps + TAU_NUM,
            StructuralProperty::OscillationBound,
            eps,
            || format!("oscillation {osc} > V_eps + 2eps = {}", full.upper.to_f64() + 2.0 * eps),
        );
        if !full.exact && osc > full.lower.to_f64() + 2.0 * eps + TAU_NUM {
            rep.notes.push(format!(
                "eps={eps}: lower bound {} too loose to confirm the oscillation bound on its own",
                full.lower
            ));
        }

        // limit, upper half: V_eps never exceeds V
        rep.check(
            full.lower.to_f64() <= jordan + TAU_NUM,
            StructuralProperty::LimitIsVariation,
            eps,
            || format!("V_eps lower {} exceeds V = {jordan}", full.lower),
        );
    }

    // limit, lower half: the finest rung is close to V
    if let (Some(&eps_min), Some(last)) = (eps_ladder.last(), prof.brackets.last()) {
        if last.exact {
            let tau_c = 2.0 * eps_min * (n.saturating_sub(1)) as f64 + TAU_NUM;
            rep.check(
                last.upper.to_f64() >= jordan - tau_c,
                StructuralProperty::LimitIsVariation,
                eps_min,
                || format!("V_eps = {} below V - {tau_c} = {}", last.upper, jordan - tau_c),
            );
        }
    }
    Ok(rep)
}

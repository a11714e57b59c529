//! Pointwise selection: the Helly principle for monotone arrays and the
//! diagonal pipeline extracting a pointwise convergent subsequence from a
//! sequence with `limsup_j V_{ε,p}(f_j) < ∞`, with certificates.
//!
//! Sequences are probed at `j = 1..=J`. Limits over `j` are estimated on the
//! tail window, the last `⌈J/2⌉` probes (or selected members).

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::approxvar::{eps_variation, prefix_eps_variation, profile, validate_ladder, Profile};
use crate::error::{Error, Result};
use crate::gage::{GageKind, Point, PseudometricId, TAU_NUM};
use crate::gridfn::{oscillation, restrict, uniform_distance, SampledFunction};
use crate::regulated::{classify_regulated, growth, is_stable, RefiningFamily, Verdict, TAU_GROWTH};

pub type SequenceGenerator = dyn Fn(usize) -> Result<SampledFunction> + Send + Sync;
pub type RefinementGenerator = dyn Fn(usize, usize) -> Result<SampledFunction> + Send + Sync;

#[derive(Clone)]
struct Refinement {
    levels: usize,
    generator: Arc<RefinementGenerator>,
}

/// `j ↦ f_j` for `j ≥ 1`. Members probed by the selection pipeline must
/// share grid and space.
///
/// A sequence may also describe each member on refining grids, `(j, level)`,
/// the evidence used to recognize a member with `V_{ε,p}(f_j) = ∞` on an
/// interval domain.
#[derive(Clone)]
pub struct FunctionSequence {
    pub label: String,
    /// `None` for an unbounded sequence.
    pub len: Option<usize>,
    generator: Arc<SequenceGenerator>,
    refinement: Option<Refinement>,
}

impl std::fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionSequence")
            .field("label", &self.label)
            .field("len", &self.len)
            .field("refinement_levels", &self.refinement.as_ref().map(|r| r.levels))
            .finish_non_exhaustive()
    }
}

impl FunctionSequence {
    pub fn new(
        label: impl Into<String>,
        len: Option<usize>,
        generator: impl Fn(usize) -> Result<SampledFunction> + Send + Sync + 'static,
    ) -> Self {
        FunctionSequence {
            label: label.into(),
            len,
            generator: Arc::new(generator),
            refinement: None,
        }
    }

    /// Finite sequence of the given functions, `f_j = members[j - 1]`.
    pub fn from_members(label: impl Into<String>, members: Vec<SampledFunction>) -> Self {
        let len = members.len();
        let members = Arc::new(members);
        FunctionSequence::new(label, Some(len), move |j| Ok(members[j - 1].clone()))
    }

    /// `levels ≥ 3`; `generator(j, level)` must refine strictly in `level`.
    pub fn with_refinement(
        mut self,
        levels: usize,
        generator: impl Fn(usize, usize) -> Result<SampledFunction> + Send + Sync + 'static,
    ) -> Self {
        self.refinement = Some(Refinement {
            levels,
            generator: Arc::new(generator),
        });
        self
    }

    pub fn has_refinement(&self) -> bool {
        self.refinement.is_some()
    }

    pub fn member(&self, j: usize) -> Result<SampledFunction> {
        if j == 0 || self.len.is_some_and(|n| j > n) {
            return Err(Error::Config(format!("sequence {} has no member {j}", self.label)));
        }
        (self.generator)(j)
    }

    /// `f_1, …, f_J`.
    pub fn probe(&self, depth: usize) -> Result<Vec<SampledFunction>> {
        if let Some(n) = self.len.filter(|&n| depth > n) {
            return Err(Error::Config(format!(
                "probe depth {depth} exceeds sequence length {n}"
            )));
        }
        (1..=depth).map(|j| self.member(j)).collect()
    }

    /// Member `j` on refining grids, when the sequence provides them.
    pub fn refining_family(&self, j: usize) -> Option<RefiningFamily> {
        let r = self.refinement.clone()?;
        let gen = Arc::clone(&r.generator);
        Some(RefiningFamily::new(
            format!("{}[{j}]", self.label),
            r.levels,
            move |level| gen(j, level),
        ))
    }

    /// Every member (and refinement) restricted to `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> FunctionSequence {
        let gen = Arc::clone(&self.generator);
        let mut out = FunctionSequence::new(format!("{}@[{lo}, {hi}]", self.label), self.len, move |j| {
            restrict(&gen(j)?, lo, hi)
        });
        if let Some(r) = &self.refinement {
            let rg = Arc::clone(&r.generator);
            out = out.with_refinement(r.levels, move |j, level| restrict(&rg(j, level)?, lo, hi));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionConfig {
    /// Strictly decreasing `ε_1 > ε_2 > … > 0`.
    pub eps_ladder: Vec<f64>,
    pub ps: Vec<PseudometricId>,
    /// Number of probed members `J ≥ 3`.
    pub probe_depth: usize,
    pub tau_conv: f64,
    /// Bisection never shrinks a selection below this size.
    pub min_keep: usize,
    /// Largest admissible stage constant `C(ε, p)`.
    pub variation_budget: Option<f64>,
}

impl SelectionConfig {
    pub fn new(eps_ladder: Vec<f64>, ps: Vec<PseudometricId>, probe_depth: usize) -> Self {
        SelectionConfig {
            eps_ladder,
            ps,
            probe_depth,
            tau_conv: 1e-9,
            min_keep: 4,
            variation_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_ladder(&self.eps_ladder)?;
        if self.ps.is_empty() {
            return Err(Error::Config("no pseudometric selected".into()));
        }
        if self.probe_depth < 3 {
            return Err(Error::Config(format!(
                "probe depth must be >= 3, got {}",
                self.probe_depth
            )));
        }
        if !(self.tau_conv >= 0.0 && self.tau_conv.is_finite()) {
            return Err(Error::Config(format!("invalid tau_conv {}", self.tau_conv)));
        }
        if self.min_keep == 0 {
            return Err(Error::Config("min_keep must be >= 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn tail_len(n: usize) -> usize {
    n.div_ceil(2)
}

#[derive(Copy, Clone, Debug)]
pub struct HellyOptions {
    /// Bisection stops once the kept values spread at most this much.
    pub tol: f64,
    pub min_keep: usize,
}

impl Default for HellyOptions {
    fn default() -> Self {
        HellyOptions { tol: 1e-9, min_keep: 1 }
    }
}

/// Bolzano–Weierstrass bisection on the values `vals[k]` of the members
/// `keep[k]`: halve the bounding interval, keep the half holding more
/// members (the lower half on ties).
fn bisect_select(keep: &[usize], vals: &[f64], opts: HellyOptions) -> Vec<usize> {
    debug_assert_eq!(keep.len(), vals.len());
    let mut cur: Vec<(usize, f64)> = keep.iter().copied().zip(vals.iter().copied()).collect();
    let spread = |c: &[(usize, f64)]| {
        let lo = c.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (mut lo, mut hi) = spread(&cur);
    loop {
        let (a, b) = spread(&cur);
        if b - a <= opts.tol || cur.len() <= opts.min_keep {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if !(mid > lo && mid < hi) {
            break;
        }
        let (lower, upper): (Vec<_>, Vec<_>) = cur.iter().partition(|x| x.1 <= mid);
        let chosen = if lower.len() >= upper.len() {
            hi = mid;
            lower
        } else {
            lo = mid;
            upper
        };
        if chosen.len() < opts.min_keep {
            break;
        }
        cur = chosen;
    }
    cur.into_iter().map(|x| x.0).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HellyResult {
    /// Positions into the input, strictly increasing.
    pub indices: Vec<usize>,
    /// The last selected array.
    pub limit: Vec<f64>,
}

/// Selects a subsequence of uniformly bounded nondecreasing arrays that
/// converges at every position, by bisection at each position in turn.
#[allow(clippy::needless_range_loop)]
pub fn helly_monotone(seq: &[Vec<f64>], opts: HellyOptions) -> Result<HellyResult> {
    let first = seq.first().ok_or_else(|| Error::Config("empty sequence".into()))?;
    let n = first.len();
    for (m, a) in seq.iter().enumerate() {
        if a.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unbounded { member: m });
        }
        if let Some(pos) = a.windows(2).position(|w| w[1] < w[0] - TAU_NUM) {
            return Err(Error::NonMonotone {
                member: m,
                position: pos + 1,
            });
        }
    }
    let mut keep: Vec<usize> = (0..seq.len()).collect();
    for t in 0..n {
        let vals: Vec<f64> = keep.iter().map(|&m| seq[m][t]).collect();
        keep = bisect_select(&keep, &vals, opts);
    }
    let limit = seq[*keep.last().expect("nonempty")].clone();
    Ok(HellyResult { indices: keep, limit })
}

/// Largest ratio of successive rises over doubling windows of `j` read as
/// convergence: `a - b/j^α` gives `2^{-α}`, logarithmic growth gives 1.
pub const DECELERATION: f64 = 0.8;

/// What supports a hypothesis verdict.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// Every tail member diverges on refining grids.
    Refinement,
    /// Lower bounds grow across `j` (the growth rule of [`classify_regulated`]).
    GrowthAcrossJ,
    /// Tail maximum within the head maximum.
    TailBelowHead,
    /// The last three values agree.
    Stabilized,
    /// The rise over `j ∈ [J/2, J]` is at most [`DECELERATION`] times the
    /// rise over `[J/4, J/2]`.
    Decelerating,
    /// The last four values are affine in `1/j`, the form `a + c/j` taken
    /// by `V_ε(f + h/j)` once the optimal path stops changing shape.
    AffineInInverseJ,
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCell {
    pub eps: f64,
    pub p: PseudometricId,
    /// Bracket bounds for `j = 1..=J`.
    pub lowers: Vec<f64>,
    pub uppers: Vec<f64>,
    /// First `j` of the tail window.
    pub tail_from: usize,
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
    /// Least `j_0` with zero upper bound at every probe `j ≥ j_0`.
    pub zero_from: Option<usize>,
    /// Slope of the lower bounds against `j` over the last three probes.
    pub slope: f64,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub label: String,
    pub probe_depth: usize,
    pub tail_window: usize,
    pub cells: Vec<HypothesisCell>,
}

impl HypothesisReport {
    pub fn cell(&self, eps: f64, p: PseudometricId) -> Option<&HypothesisCell> {
        self.cells.iter().find(|c| c.eps == eps && c.p == p)
    }

    /// First diverging cell in ladder order.
    pub fn first_diverging(&self) -> Option<&HypothesisCell> {
        self.cells.iter().find(|c| c.verdict == Verdict::Diverging)
    }
}

/// The last four `values[j-1]` lie on a line in `1/j` up to
/// [`TAU_GROWTH`] relative plus [`TAU_NUM`].
fn affine_in_inverse_j(values: &[f64]) -> bool {
    let n = values.len();
    if n < 4 || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let pts: Vec<(f64, f64)> = (n - 3..=n).map(|j| (1.0 / j as f64, values[j - 1])).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c = sxy / sxx;
    pts.iter()
        .all(|&(x, y)| (y - my - c * (x - mx)).abs() <= TAU_GROWTH * y.abs().max(1.0) + TAU_NUM)
}

fn hypothesis_cell(
    family: &FunctionSequence,
    members: &[SampledFunction],
    eps: f64,
    p: PseudometricId,
) -> Result<HypothesisCell> {
    let j_count = members.len();
    let brackets = members
        .iter()
        .map(|f| eps_variation(f, p, eps))
        .collect::<Result<Vec<_>>>()?;
    let lowers: Vec<f64> = brackets.iter().map(|b| b.lower.to_f64()).collect();
    let uppers: Vec<f64> = brackets.iter().map(|b| b.upper.to_f64()).collect();
    let tail = tail_len(j_count);
    let head = j_count - tail;
    let tail_from = head + 1;
    let liminf_estimate = lowers[head..].iter().copied().fold(f64::INFINITY, f64::min);
    let limsup_estimate = uppers[head..].iter().copied().fold(0.0, f64::max);
    let zero_from = {
        let nonzero = uppers.iter().rposition(|&u| u != 0.0);
        match nonzero {
            None => Some(1),
            Some(i) if i + 1 < j_count => Some(i + 2),
            Some(_) => None,
        }
    };
    let js: Vec<f64> = (1..=j_count).map(|j| j as f64).collect();
    let (slope, grows) = growth(&js, &lowers);

    let refinement_diverges = || -> Result<bool> {
        if !family.has_refinement() {
            return Ok(false);
        }
        for j in tail_from..=j_count {
            let fam = family.refining_family(j).expect("refinement present");
            let rep = classify_regulated(&fam, &[eps], &[p])?;
            if rep.cells[0].verdict != Verdict::Diverging {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let head_max = uppers[..head].iter().copied().fold(0.0, f64::max);
    let quarter = (j_count / 4).max(1);
    let early_rise = uppers[head - 1] - uppers[quarter - 1];
    let late_rise = uppers[j_count - 1] - uppers[head - 1];
    let (verdict, evidence) = if refinement_diverges()? {
        (Verdict::Diverging, Evidence::Refinement)
    } else if grows {
        (Verdict::Diverging, Evidence::GrowthAcrossJ)
    } else if limsup_estimate.is_finite() && limsup_estimate <= head_max * (1.0 + TAU_GROWTH) + TAU_NUM {
        (Verdict::Bounded, Evidence::TailBelowHead)
    } else if is_stable(&uppers) {
        (Verdict::Bounded, Evidence::Stabilized)
    } else if limsup_estimate.is_finite() && early_rise > 0.0 && late_rise <= DECELERATION * early_rise {
        (Verdict::Bounded, Evidence::Decelerating)
    } else if affine_in_inverse_j(&uppers) {
        (Verdict::Bounded, Evidence::AffineInInverseJ)
    } else {
        (Verdict::Inconclusive, Evidence::None)
    };
    Ok(HypothesisCell {
        eps,
        p,
        lowers,
        uppers,
        tail_from,
        liminf_estimate,
        limsup_estimate,
        zero_from,
        slope,
        verdict,
        evidence,
    })
}

fn hypothesis_on(
    family: &FunctionSequence,
    members: &[SampledFunction],
    eps_ladder: &[f64],
    ps: &[PseudometricId],
) -> Result<HypothesisReport> {
    validate_ladder(eps_ladder)?;
    if members.len() < 3 {
        return Err(Error::Config(format!(
            "probe depth must be >= 3, got {}",
            members.len()
        )));
    }
    for &p in ps {
        members[0].space().check_pseudometric(p)?;
    }
    let cells_in: Vec<(f64, PseudometricId)> = eps_ladder
        .iter()
        .flat_map(|&e| ps.iter().map(move |&p| (e, p)))
        .collect();
    let cells = cells_in
        .par_iter()
        .map(|&(eps, p)| hypothesis_cell(family, members, eps, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(HypothesisReport {
        label: family.label.clone(),
        probe_depth: members.len(),
        tail_window: tail_len(members.len()),
        cells,
    })
}

/// Estimates whether `limsup_j V_{ε,p}(f_j) < ∞` for every `(ε, p)` from
/// the probes `j = 1..=J`.
///
/// Diverging: every tail member diverges under refinement, or the lower
/// bounds grow across `j` by the refining-family rule. Bounded: the tail
/// stays within the head maximum, the values stabilize, or the growth
/// decelerates over doubling windows of `j`. Otherwise Inconclusive.
pub fn verify_hypothesis(
    family: &FunctionSequence,
    eps_ladder: &[f64],
    ps: &[PseudometricId],
    probe_depth: usize,
) -> Result<HypothesisReport> {
    if probe_depth < 3 {
        return Err(Error::Config(format!("probe depth must be >= 3, got {probe_depth}")));
    }
    let members = family.probe(probe_depth)?;
    hypothesis_on(family, &members, eps_ladder, ps)
}

/// One `(k, p)` stage of the diagonal extraction.
#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub p: PseudometricId,
    pub k: usize,
    pub eps: f64,
    /// Selected `j` after this stage, a subsequence of the previous stage's.
    pub selected: Vec<usize>,
    /// `φ_{k,p}`: limit of the prefix ε-variations over the selection.
    pub envelope: Vec<f64>,
    /// `C(ε_k, p)`: largest probed upper bound of `V_{ε_k,p}(f_j)`.
    pub bound: f64,
    pub envelope_monotone: bool,
    pub envelope_bounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseConvergence {
    pub p: PseudometricId,
    /// `max_t d_p(f_j(t), limit(t))` for each selected `j`, in order.
    pub distances: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundednessCertificate {
    pub p: PseudometricId,
    pub oscillation: f64,
    /// `min_ε (tail max of upper V_{ε,p}(f_j) + 2ε)` over the selection.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificates {
    pub pointwise_conv: Vec<PointwiseConvergence>,
    /// Every tail distance is at most `τ_conv`.
    pub converged: bool,
    pub boundedness: Vec<BoundednessCertificate>,
    pub envelopes_ok: bool,
    /// Pairs `s < t` with `φ_{k,p}(t) - φ_{k,p}(s) < ε_k` but
    /// `d_p(f_j(s), f_j(t)) > 6ε_k + τ_conv` for a selected tail member.
    pub six_eps_violations: usize,
    pub limit_profiles: Vec<Profile>,
    pub limit_profile_finite: bool,
    pub certified: bool,
}

fn serialize_function<S: Serializer>(f: &SampledFunction, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Repr<'a> {
        t: &'a [f64],
        values: &'a [Point],
    }
    Repr {
        t: f.grid().points(),
        values: f.values(),
    }
    .serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionTrace {
    pub label: String,
    pub config: SelectionConfig,
    pub hypothesis: HypothesisReport,
    pub stages: Vec<Stage>,
    /// Selection after pointwise extraction of values.
    pub pointwise_selected: Vec<usize>,
    /// On a finite grid the dense set is the whole grid.
    pub dense_set_step: &'static str,
    pub selected: Vec<usize>,
    #[serde(serialize_with = "serialize_function")]
    pub limit: SampledFunction,
    pub certificates: Certificates,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnosis {
    pub eps: f64,
    pub p: PseudometricId,
    pub reason: String,
    pub hypothesis: HypothesisReport,
}

impl std::fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Diverging at (ε={}, p={}): {}", self.eps, self.p, self.reason)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SelectionOutcome {
    Certified(Box<SelectionTrace>),
    Uncertified(Box<SelectionTrace>),
    Diagnosis(Diagnosis),
}

impl SelectionOutcome {
    pub fn trace(&self) -> Option<&SelectionTrace> {
        match self {
            SelectionOutcome::Certified(t) | SelectionOutcome::Uncertified(t) => Some(t),
            SelectionOutcome::Diagnosis(_) => None,
        }
    }

    pub fn diagnosis(&self) -> Option<&Diagnosis> {
        match self {
            SelectionOutcome::Diagnosis(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, SelectionOutcome::Certified(_))
    }
}

const DENSE_SET_STEP: &str = "vacuous: on a finite grid the dense set is the whole grid";

/// Runs the diagonal selection on `f_1, …, f_J`.
///
/// 1. For each `p`, then each `ε_k`, select by Helly on the prefix
///    ε-variation arrays `t ↦ V_{ε_k,p}(f_j, T ∩ (-inf, t])`.
/// 2. Select values at every grid point: bisection per real coordinate,
///    most frequent point (smallest index on ties) on a finite space.
/// 3. Vacuous on a finite grid, recorded as such.
/// 4. Certify convergence, boundedness of the limit, the envelopes and the
///    `6ε` bound.
///
/// A Diverging hypothesis cell, or a stage constant above the budget,
/// returns a diagnosis instead of a trace.
pub fn pointwise_select(family: &FunctionSequence, cfg: &SelectionConfig) -> Result<SelectionOutcome> {
    select_from(family, cfg, None)
}

fn select_from(
    family: &FunctionSequence,
    cfg: &SelectionConfig,
    initial: Option<&[usize]>,
) -> Result<SelectionOutcome> {
    cfg.validate()?;
    let members = family.probe(cfg.probe_depth)?;
    let hyp = hypothesis_on(family, &members, &cfg.eps_ladder, &cfg.ps)?;
    if let Some(c) = hyp.first_diverging() {
        let reason = match c.evidence {
            Evidence::Refinement => format!("every tail member j >= {} diverges on refining grids", c.tail_from),
            _ => format!(
                "lower bounds grow across j, last {} with slope {}",
                c.lowers.last().expect("probes"),
                c.slope
            ),
        };
        return Ok(SelectionOutcome::Diagnosis(Diagnosis {
            eps: c.eps,
            p: c.p,
            reason,
            hypothesis: hyp.clone(),
        }));
    }
    if let Some(budget) = cfg.variation_budget {
        if let Some(c) = hyp.cells.iter().find(|c| c.limsup_estimate > budget) {
            return Ok(SelectionOutcome::Diagnosis(Diagnosis {
                eps: c.eps,
                p: c.p,
                reason: format!("stage constant {} exceeds the budget {budget}", c.limsup_estimate),
                hypothesis: hyp.clone(),
            }));
        }
    }
    let f1 = &members[0];
    if members.iter().any(|f| !f.same_domain(f1)) {
        return Err(Error::DomainMismatch);
    }

    let opts = HellyOptions {
        tol: cfg.tau_conv,
        min_keep: cfg.min_keep,
    };
    let mut selected: Vec<usize> = match initial {
        Some(init) => {
            if init.is_empty() || init.iter().any(|&j| j == 0 || j > cfg.probe_depth) {
                return Err(Error::Config("initial selection out of the probed range".into()));
            }
            init.to_vec()
        }
        None => (1..=cfg.probe_depth).collect(),
    };

    // Step 1. The prefix arrays of every probe are independent of the
    // selection, so compute them up front; the fold below is sequential.
    let cells: Vec<(usize, usize)> = (0..cfg.ps.len())
        .flat_map(|pi| (0..cfg.eps_ladder.len()).map(move |k| (pi, k)))
        .collect();
    let arrays: Vec<Vec<Vec<f64>>> = cells
        .par_iter()
        .map(|&(pi, k)| {
            members
                .iter()
                .map(|f| {
                    Ok(prefix_eps_variation(f, cfg.ps[pi], cfg.eps_ladder[k])?
                        .into_iter()
                        .map(|v| v.to_f64())
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;
    let mut stages = Vec::with_capacity(cells.len());
    for (&(pi, k), arr) in cells.iter().zip(&arrays) {
        let (p, eps) = (cfg.ps[pi], cfg.eps_ladder[k]);
        let seq: Vec<Vec<f64>> = selected.iter().map(|&j| arr[j - 1].clone()).collect();
        let h = helly_monotone(&seq, opts)?;
        selected = h.indices.iter().map(|&i| selected[i]).collect();
        let bound = hyp
            .cell(eps, p)
            .expect("cell")
            .uppers
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let envelope_monotone = h.limit.windows(2).all(|w| w[0] <= w[1] + TAU_NUM);
        let envelope_bounded = h.limit.iter().all(|&v| v <= bound + TAU_NUM);
        stages.push(Stage {
            p,
            k,
            eps,
            selected: selected.clone(),
            envelope: h.limit,
            bound,
            envelope_monotone,
            envelope_bounded,
        });
    }

    // Step 2.
    let n = f1.len();
    for i in 0..n {
        match f1.space().kind() {
            GageKind::Finite { .. } => {
                let idx = |j: usize| match members[j - 1].values()[i] {
                    Point::Index(x) => x,
                    _ => unreachable!(),
                };
                let mut counts: Vec<(usize, usize)> = Vec::new();
                for &j in &selected {
                    let x = idx(j);
                    match counts.iter_mut().find(|c| c.0 == x) {
                        Some(c) => c.1 += 1,
                        None => counts.push((x, 1)),
                    }
                }
                counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                let (x, count) = counts[0];
                if count >= cfg.min_keep.min(selected.len()) {
                    selected.retain(|&j| idx(j) == x);
                }
            }
            GageKind::Scalar | GageKind::Coordinate { .. } => {
                let dims = match f1.space().kind() {
                    GageKind::Coordinate { dim } => *dim,
                    _ => 1,
                };
                for q in 0..dims {
                    let vals: Vec<f64> = selected
                        .iter()
                        .map(|&j| members[j - 1].values()[i].coordinate(q).expect("real"))
                        .collect();
                    selected = bisect_select(&selected, &vals, opts);
                }
            }
        }
    }
    let pointwise_selected = selected.clone();

    // Step 4.
    let limit = members[*selected.last().expect("nonempty") - 1].clone();
    let tail = &selected[selected.len() - tail_len(selected.len())..];
    let mut pointwise_conv = Vec::new();
    let mut converged = true;
    for &p in &cfg.ps {
        let distances = selected
            .iter()
            .map(|&j| uniform_distance(&members[j - 1], &limit, p))
            .collect::<Result<Vec<_>>>()?;
        converged &= distances[distances.len() - tail.len()..]
            .iter()
            .all(|&d| d <= cfg.tau_conv);
        pointwise_conv.push(PointwiseConvergence { p, distances });
    }
    let mut boundedness = Vec::new();
    for &p in &cfg.ps {
        let osc = oscillation(&limit, p)?;
        let bound = cfg
            .eps_ladder
            .iter()
            .map(|&eps| {
                let c = hyp.cell(eps, p).expect("cell");
                tail.iter().map(|&j| c.uppers[j - 1]).fold(0.0, f64::max) + 2.0 * eps
            })
            .fold(f64::INFINITY, f64::min);
        boundedness.push(BoundednessCertificate {
            p,
            oscillation: osc,
            bound,
            ok: osc <= bound + cfg.tau_conv,
        });
    }
    let envelopes_ok = stages.iter().all(|s| s.envelope_monotone && s.envelope_bounded);
    let mut six_eps_violations = 0;
    for s in &stages {
        for a in 0..n {
            for b in a + 1..n {
                if s.envelope[b] - s.envelope[a] >= s.eps {
                    continue;
                }
                for &j in tail {
                    let f = &members[j - 1];
                    let d = f.space().d(s.p.0, &f.values()[a], &f.values()[b]);
                    if d > 6.0 * s.eps + cfg.tau_conv {
                        six_eps_violations += 1;
                    }
                }
            }
        }
    }
    let limit_profiles = cfg
        .ps
        .iter()
        .map(|&p| profile(&limit, p, &cfg.eps_ladder))
        .collect::<Result<Vec<_>>>()?;
    let limit_profile_finite = limit_profiles
        .iter()
        .all(|pr| pr.brackets.iter().all(|b| b.upper.is_finite()));
    let certified = converged
        && boundedness.iter().all(|b| b.ok)
        && envelopes_ok
        && six_eps_violations == 0
        && limit_profile_finite;
    let trace = SelectionTrace {
        label: family.label.clone(),
        config: cfg.clone(),
        hypothesis: hyp,
        stages,
        pointwise_selected,
        dense_set_step: DENSE_SET_STEP,
        selected,
        limit,
        certificates: Certificates {
            pointwise_conv,
            converged,
            boundedness,
            envelopes_ok,
            six_eps_violations,
            limit_profiles,
            limit_profile_finite,
            certified,
        },
    };
    Ok(if certified {
        SelectionOutcome::Certified(Box::new(trace))
    } else {
        SelectionOutcome::Uncertified(Box::new(trace))
    })
}

/// One ladder value compared against the sandwich
/// `V_{ε⁺,p}(f) ≤ liminf_j V_{ε,p}(f_j)` and
/// `limsup_j V_{ε,p}(f_j) ≤ V_{ε⁻,p}(f)` for ladder neighbors `ε⁻ < ε < ε⁺`.
#[derive(Clone, Debug, Serialize)]
pub struct UnifCell {
    pub eps: f64,
    pub p: PseudometricId,
    pub eps_plus: Option<f64>,
    pub eps_minus: Option<f64>,
    /// Largest `d_p(f_j, f)` over the tail window.
    pub tail_distance: f64,
    /// The tail distance is within the gap to each neighbor, which makes
    /// both inequalities hold for every tail member.
    pub applicable: bool,
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
    /// Lower tail estimates, for the bracket-aware right-hand checks.
    pub liminf_lower: f64,
    pub limsup_lower: f64,
    pub left_ok: Option<bool>,
    pub right_ok: Option<bool>,
    /// Right inequality with `V_{ε⁻,p}(f)` replaced by `V_{ε,p}(f)`, which
    /// is not valid in general.
    pub replaced_right_ok: bool,
    /// `min_j (lower V_{ε,p}(f_j)) - upper V_{ε,p}(f)` over all probes.
    pub replaced_right_excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnifReport {
    pub label: String,
    pub probe_depth: usize,
    pub tail_window: usize,
    pub cells: Vec<UnifCell>,
}

impl UnifReport {
    /// No applicable cell refutes either inequality.
    pub fn sandwich_holds(&self) -> bool {
        self.cells
            .iter()
            .filter(|c| c.applicable)
            .all(|c| c.left_ok != Some(false) && c.right_ok != Some(false))
    }

    pub fn cell(&self, eps: f64, p: PseudometricId) -> Option<&UnifCell> {
        self.cells.iter().find(|c| c.eps == eps && c.p == p)
    }
}

/// Checks the ladder-neighbor sandwich of `V_{ε,p}(f_j)` around the
/// profile of the uniform limit `f`, bracket-aware.
pub fn check_uniform_limit_sandwich(
    family: &FunctionSequence,
    f: &SampledFunction,
    eps_ladder: &[f64],
    ps: &[PseudometricId],
    probe_depth: usize,
) -> Result<UnifReport> {
    validate_ladder(eps_ladder)?;
    if probe_depth < 3 {
        return Err(Error::Config(format!("probe depth must be >= 3, got {probe_depth}")));
    }
    let members = family.probe(probe_depth)?;
    if members.iter().any(|g| !g.same_domain(f)) {
        return Err(Error::DomainMismatch);
    }
    let tail = tail_len(probe_depth);
    let head = probe_depth - tail;
    let mut cells = Vec::new();
    for &p in ps {
        f.space().check_pseudometric(p)?;
        let prof = profile(f, p, eps_ladder)?;
        let tail_distance = members[head..]
            .iter()
            .map(|g| uniform_distance(g, f, p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        for (k, &eps) in eps_ladder.iter().enumerate() {
            let brackets = members
                .iter()
                .map(|g| eps_variation(g, p, eps))
                .collect::<Result<Vec<_>>>()?;
            let lo: Vec<f64> = brackets.iter().map(|b| b.lower.to_f64()).collect();
            let up: Vec<f64> = brackets.iter().map(|b| b.upper.to_f64()).collect();
            let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let liminf_estimate = min(&up[head..]);
            let limsup_estimate = max(&up[head..]);
            let liminf_lower = min(&lo[head..]);
            let limsup_lower = max(&lo[head..]);
            let eps_plus = (k > 0).then(|| eps_ladder[k - 1]);
            let eps_minus = eps_ladder.get(k + 1).copied();
            let gap = eps_plus
                .map(|e| e - eps)
                .into_iter()
                .chain(eps_minus.map(|e| eps - e))
                .fold(f64::INFINITY, f64::min);
            let applicable = tail_distance <= gap;
            let left_ok = (k > 0).then(|| prof.brackets[k - 1].lower.to_f64() <= liminf_estimate + TAU_NUM);
            let right_ok = eps_minus.map(|_| limsup_lower <= prof.brackets[k + 1].upper.to_f64() + TAU_NUM);
            let v_eps = prof.brackets[k].upper.to_f64();
            cells.push(UnifCell {
                eps,
                p,
                eps_plus,
                eps_minus,
                tail_distance,
                applicable,
                liminf_estimate,
                limsup_estimate,
                liminf_lower,
                limsup_lower,
                left_ok,
                right_ok,
                replaced_right_ok: limsup_lower <= v_eps + TAU_NUM,
                replaced_right_excess: min(&lo) - v_eps,
            });
        }
    }
    Ok(UnifReport {
        label: family.label.clone(),
        probe_depth,
        tail_window: tail,
        cells,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowResult {
    pub lo: f64,
    pub hi: f64,
    pub outcome: SelectionOutcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalSelection {
    pub windows: Vec<WindowResult>,
    /// Index of the largest certified window, whose selection is a
    /// subsequence of every earlier window's.
    pub merged_window: Option<usize>,
    pub selected: Vec<usize>,
}

/// Runs [`pointwise_select`] on expanding nested windows, each starting from
/// the selection of the last certified window. Boundedness is certified
/// per window only.
pub fn local_select(
    family: &FunctionSequence,
    windows: &[(f64, f64)],
    cfg: &SelectionConfig,
) -> Result<LocalSelection> {
    if windows.is_empty() {
        return Err(Error::Config("no windows".into()));
    }
    for (i, &(lo, hi)) in windows.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Config(format!("window {i} is empty: [{lo}, {hi}]")));
        }
        if i > 0 {
            let (plo, phi) = windows[i - 1];
            if lo > plo || hi < phi {
                return Err(Error::Config(format!("window {i} does not contain window {}", i - 1)));
            }
        }
    }
    let mut results = Vec::with_capacity(windows.len());
    let mut current: Option<Vec<usize>> = None;
    let mut merged_window = None;
    for (i, &(lo, hi)) in windows.iter().enumerate() {
        let restricted = family.restrict(lo, hi);
        let outcome = select_from(&restricted, cfg, current.as_deref())?;
        if let SelectionOutcome::Certified(t) = &outcome {
            current = Some(t.selected.clone());
            merged_window = Some(i);
        }
        results.push(WindowResult { lo, hi, outcome });
    }
    Ok(LocalSelection {
        windows: results,
        merged_window,
        selected: current.unwrap_or_default(),
    })
}

//! Value spaces described by a finite family of pseudometrics.
//!
//! Three concrete spaces are supported: the real line with `|x - y|`, `R^N`
//! with one coordinate pseudometric per axis, and a finite point set with one
//! explicit distance table per pseudometric.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance for equality and triangle-inequality checks on reals.
pub const TAU_NUM: f64 = 1e-9;

/// Index of a pseudometric in the space's gage, dense in `0..count`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PseudometricId(pub usize);

impl PseudometricId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for PseudometricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A value of a [`GageSpace`].
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Real(f64),
    Vector(Vec<f64>),
    /// Index into the point list of a finite space.
    Index(usize),
}

impl Point {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Point::Real(v) => Some(*v),
            _ => None,
        }
    }

    /// Coordinate `p` of a real or vector point.
    pub fn coordinate(&self, p: usize) -> Option<f64> {
        match self {
            Point::Real(v) if p == 0 => Some(*v),
            Point::Vector(c) => c.get(p).copied(),
            _ => None,
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Point::Real(v) => s.serialize_f64(*v),
            Point::Vector(c) => c.serialize(s),
            Point::Index(i) => s.serialize_u64(*i as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GageKind {
    /// The real line, one pseudometric `|x - y|`.
    Scalar,
    /// `R^dim` with `d_p(x, y) = |x_p - y_p|`.
    Coordinate { dim: usize },
    /// Finitely many named points, one distance matrix per pseudometric.
    Finite {
        points: Vec<String>,
        metrics: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GageSpace {
    kind: GageKind,
    candidates: Option<Vec<Point>>,
}

impl GageSpace {
    pub fn scalar() -> Self {
        GageSpace {
            kind: GageKind::Scalar,
            candidates: None,
        }
    }

    pub fn coordinate(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("coordinate dimension must be >= 1".into()));
        }
        Ok(GageSpace {
            kind: GageKind::Coordinate { dim },
            candidates: None,
        })
    }

    /// Builds a finite space and verifies every pseudometric axiom on all
    /// triples of points.
    pub fn finite(points: Vec<String>, metrics: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let space = Self::finite_unchecked(points, metrics)?;
        let all = space.all_points().unwrap_or_default();
        for p in 0..space.num_pseudometrics() {
            let report = check_pseudometric_axioms(&space, PseudometricId(p), &all)?;
            if let Some(v) = report.violations.first() {
                return Err(Error::InvalidSpace(format!("pseudometric {p}: {v}")));
            }
        }
        Ok(space)
    }

    /// Builds a finite space checking only the table shapes and that every
    /// entry is finite and nonnegative. Axioms are left to
    /// [`check_pseudometric_axioms`].
    pub fn finite_unchecked(points: Vec<String>, metrics: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidSpace("finite space needs at least one point".into()));
        }
        if metrics.is_empty() {
            return Err(Error::InvalidSpace(
                "finite space needs at least one pseudometric".into(),
            ));
        }
        for (p, m) in metrics.iter().enumerate() {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidSpace(format!("metric {p} must be a {n}x{n} matrix")));
            }
            if m.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "metric {p} has a negative or non-finite entry"
                )));
            }
        }
        Ok(GageSpace {
            kind: GageKind::Finite { points, metrics },
            candidates: None,
        })
    }

    /// Two-point space `{x, y}` with a single metric `d(x, y) = d`.
    pub fn two_point(d: f64) -> Result<Self> {
        Self::finite(vec!["x".into(), "y".into()], vec![vec![vec![0.0, d], vec![d, 0.0]]])
    }

    /// Attaches an explicit list of candidate minimizer values.
    pub fn with_candidates(mut self, candidates: Vec<Point>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidSpace("candidate list is empty".into()));
        }
        for c in &candidates {
            self.validate_point(c)?;
        }
        self.candidates = Some(candidates);
        Ok(self)
    }

    pub fn kind(&self) -> &GageKind {
        &self.kind
    }

    pub fn candidates(&self) -> Option<&[Point]> {
        self.candidates.as_deref()
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.kind, GageKind::Scalar)
    }

    /// Whether every pseudometric comes from a norm (midpoints exist).
    pub fn is_normed(&self) -> bool {
        matches!(self.kind, GageKind::Scalar | GageKind::Coordinate { .. })
    }

    pub fn num_pseudometrics(&self) -> usize {
        match &self.kind {
            GageKind::Scalar => 1,
            GageKind::Coordinate { dim } => *dim,
            GageKind::Finite { metrics, .. } => metrics.len(),
        }
    }

    /// Every point of a finite space, `None` otherwise.
    pub fn all_points(&self) -> Option<Vec<Point>> {
        match &self.kind {
            GageKind::Finite { points, .. } => Some((0..points.len()).map(Point::Index).collect()),
            _ => None,
        }
    }

    pub fn point_name(&self, idx: usize) -> Option<&str> {
        match &self.kind {
            GageKind::Finite { points, .. } => points.get(idx).map(String::as_str),
            _ => None,
        }
    }

    pub fn point_by_name(&self, name: &str) -> Option<Point> {
        match &self.kind {
            GageKind::Finite { points, .. } => points.iter().position(|n| n == name).map(Point::Index),
            _ => None,
        }
    }

    pub fn check_pseudometric(&self, p: PseudometricId) -> Result<()> {
        let count = self.num_pseudometrics();
        if p.0 >= count {
            return Err(Error::InvalidPseudometric { index: p.0, count });
        }
        Ok(())
    }

    pub fn validate_point(&self, x: &Point) -> Result<()> {
        let ok = match (&self.kind, x) {
            (GageKind::Scalar, Point::Real(v)) => v.is_finite(),
            (GageKind::Coordinate { dim }, Point::Vector(c)) => c.len() == *dim && c.iter().all(|v| v.is_finite()),
            (GageKind::Finite { points, .. }, Point::Index(i)) => *i < points.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PointMismatch(format!("{x:?}")))
        }
    }

    pub fn distance(&self, p: PseudometricId, x: &Point, y: &Point) -> Result<f64> {
        self.check_pseudometric(p)?;
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.d(p.0, x, y))
    }

    /// Unchecked distance for points already validated against this space.
    #[inline]
    pub(crate) fn d(&self, p: usize, x: &Point, y: &Point) -> f64 {
        match (&self.kind, x, y) {
            (GageKind::Scalar, Point::Real(a), Point::Real(b)) => (a - b).abs(),
            (GageKind::Coordinate { .. }, Point::Vector(a), Point::Vector(b)) => (a[p] - b[p]).abs(),
            (GageKind::Finite { metrics, .. }, Point::Index(i), Point::Index(j)) => metrics[p][*i][*j],
            _ => unreachable!("point kind does not match space"),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SpaceConfig = serde_json::from_str(text)?;
        cfg.build()
    }

    pub fn to_config(&self) -> SpaceConfig {
        match &self.kind {
            GageKind::Scalar => SpaceConfig::Scalar {
                candidates: self
                    .candidates
                    .as_ref()
                    .map(|c| c.iter().filter_map(Point::as_real).collect()),
            },
            GageKind::Coordinate { dim } => SpaceConfig::Coordinate {
                dim: *dim,
                candidates: self.candidates.as_ref().map(|c| {
                    c.iter()
                        .filter_map(|x| match x {
                            Point::Vector(v) => Some(v.clone()),
                            _ => None,
                        })
                        .collect()
                }),
            },
            GageKind::Finite { points, metrics } => SpaceConfig::Finite {
                points: points.clone(),
                metrics: metrics.clone(),
                candidates: self.candidates.as_ref().map(|c| {
                    c.iter()
                        .filter_map(|x| match x {
                            Point::Index(i) => Some(points[*i].clone()),
                            _ => None,
                        })
                        .collect()
                }),
            },
        }
    }
}

/// JSON description of a [`GageSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceConfig {
    Scalar {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        candidates: Option<Vec<f64>>,
    },
    Coordinate {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        candidates: Option<Vec<Vec<f64>>>,
    },
    Finite {
        points: Vec<String>,
        metrics: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        candidates: Option<Vec<String>>,
    },
}

impl SpaceConfig {
    pub fn build(self) -> Result<GageSpace> {
        match self {
            SpaceConfig::Scalar { candidates } => {
                let s = GageSpace::scalar();
                match candidates {
                    Some(c) => s.with_candidates(c.into_iter().map(Point::Real).collect()),
                    None => Ok(s),
                }
            }
            SpaceConfig::Coordinate { dim, candidates } => {
                let s = GageSpace::coordinate(dim)?;
                match candidates {
                    Some(c) => s.with_candidates(c.into_iter().map(Point::Vector).collect()),
                    None => Ok(s),
                }
            }
            SpaceConfig::Finite {
                points,
                metrics,
                candidates,
            } => {
                let s = GageSpace::finite(points, metrics)?;
                match candidates {
                    Some(names) => {
                        let pts = names
                            .iter()
                            .map(|n| {
                                s.point_by_name(n)
                                    .ok_or_else(|| Error::InvalidSpace(format!("unknown candidate point {n:?}")))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        s.with_candidates(pts)
                    }
                    None => Ok(s),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    NonzeroSelfDistance {
        x: usize,
        value: f64,
    },
    Asymmetric {
        x: usize,
        y: usize,
        forward: f64,
        backward: f64,
    },
    Triangle {
        x: usize,
        y: usize,
        z: usize,
        direct: f64,
        via: f64,
    },
}

impl std::fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxiomViolation::NonzeroSelfDistance { x, value } => {
                write!(f, "d(x{x}, x{x}) = {value} != 0")
            }
            AxiomViolation::Asymmetric {
                x,
                y,
                forward,
                backward,
            } => write!(f, "d(x{x}, x{y}) = {forward} but d(x{y}, x{x}) = {backward}"),
            AxiomViolation::Triangle { x, y, z, direct, via } => {
                write!(f, "d(x{x}, x{y}) = {direct} > d(x{x}, x{z}) + d(x{z}, x{y}) = {via}")
            }
        }
    }
}

/// Axiom violations found on a sample; indices refer to sample positions.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d_p(x,x) = 0`, symmetry and the triangle inequality (up to
/// [`TAU_NUM`]) on every triple drawn from `sample`.
pub fn check_pseudometric_axioms(space: &GageSpace, p: PseudometricId, sample: &[Point]) -> Result<AxiomReport> {
    space.check_pseudometric(p)?;
    if sample.is_empty() {
        return Err(Error::Config("axiom check needs a nonempty sample".into()));
    }
    for x in sample {
        space.validate_point(x)?;
    }
    let d = |i: usize, j: usize| space.d(p.0, &sample[i], &sample[j]);
    let n = sample.len();
    let mut violations = Vec::new();
    for i in 0..n {
        let self_d = d(i, i);
        if self_d.abs() > TAU_NUM {
            violations.push(AxiomViolation::NonzeroSelfDistance { x: i, value: self_d });
        }
        for j in (i + 1)..n {
            let (fwd, bwd) = (d(i, j), d(j, i));
            if (fwd - bwd).abs() > TAU_NUM {
                violations.push(AxiomViolation::Asymmetric {
                    x: i,
                    y: j,
                    forward: fwd,
                    backward: bwd,
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let direct = d(i, j);
                let via = d(i, k) + d(k, j);
                if direct > via + TAU_NUM {
                    violations.push(AxiomViolation::Triangle {
                        x: i,
                        y: j,
                        z: k,
                        direct,
                        via,
                    });
                }
            }
        }
    }
    Ok(AxiomReport { violations })
}

/// Pairs of distinct sample points that no pseudometric separates.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HausdorffReport {
    pub violations: Vec<(usize, usize)>,
}

impl HausdorffReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_hausdorff(space: &GageSpace, sample: &[Point]) -> Result<HausdorffReport> {
    if sample.is_empty() {
        return Err(Error::Config("Hausdorff check needs a nonempty sample".into()));
    }
    for x in sample {
        space.validate_point(x)?;
    }
    let count = space.num_pseudometrics();
    let mut violations = Vec::new();
    for i in 0..sample.len() {
        for j in (i + 1)..sample.len() {
            if sample[i] == sample[j] {
                continue;
            }
            if (0..count).all(|p| space.d(p, &sample[i], &sample[j]) == 0.0) {
                violations.push((i, j));
            }
        }
    }
    Ok(HausdorffReport { violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point(m01: f64, m02: f64, m21: f64) -> GageSpace {
        let m = vec![vec![0.0, m01, m02], vec![m01, 0.0, m21], vec![m02, m21, 0.0]];
        GageSpace::finite_unchecked(vec!["a".into(), "b".into(), "c".into()], vec![m]).unwrap()
    }

    #[test]
    fn scalar_distance() {
        let s = GageSpace::scalar();
        let d = s
            .distance(PseudometricId(0), &Point::Real(1.5), &Point::Real(-0.5))
            .unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(
            s.distance(PseudometricId(0), &Point::Real(3.0), &Point::Real(3.0))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn finite_lookup_and_errors() {
        let s = three_point(1.0, 2.0, 1.5);
        let d = s
            .distance(PseudometricId(0), &Point::Index(0), &Point::Index(2))
            .unwrap();
        assert_eq!(d, 2.0);
        assert!(matches!(
            s.distance(PseudometricId(1), &Point::Index(0), &Point::Index(1)),
            Err(Error::InvalidPseudometric { index: 1, count: 1 })
        ));
        assert!(matches!(
            s.distance(PseudometricId(0), &Point::Real(0.0), &Point::Index(1)),
            Err(Error::PointMismatch(_))
        ));
        assert!(s
            .distance(PseudometricId(0), &Point::Index(3), &Point::Index(1))
            .is_err());
    }

    #[test]
    fn triangle_violation_is_reported() {
        let s = three_point(5.0, 1.0, 1.0);
        let all = s.all_points().unwrap();
        let report = check_pseudometric_axioms(&s, PseudometricId(0), &all).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, AxiomViolation::Triangle { direct, .. } if *direct == 5.0)));
        let err = GageSpace::finite(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]],
        );
        assert!(matches!(err, Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn scalar_axioms_hold() {
        let s = GageSpace::scalar();
        let sample: Vec<_> = [0.0, 1.0, 2.0].into_iter().map(Point::Real).collect();
        assert!(check_pseudometric_axioms(&s, PseudometricId(0), &sample)
            .unwrap()
            .is_ok());
    }

    #[test]
    fn hausdorff_cases() {
        let c = GageSpace::coordinate(2).unwrap();
        let sample = vec![Point::Vector(vec![0.0, 0.0]), Point::Vector(vec![0.0, 1.0])];
        assert!(check_hausdorff(&c, &sample).unwrap().is_ok());

        let z = GageSpace::finite_unchecked(vec!["a".into(), "b".into()], vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]]])
            .unwrap();
        let report = check_hausdorff(&z, &z.all_points().unwrap()).unwrap();
        assert_eq!(report.violations, vec![(0, 1)]);

        let s = GageSpace::scalar();
        let tiny = vec![Point::Real(0.0), Point::Real(1e-30)];
        assert!(check_hausdorff(&s, &tiny).unwrap().is_ok());
    }

    #[test]
    fn json_config_round_trip() {
        let s = GageSpace::from_json(r#"{"kind":"scalar"}"#).unwrap();
        assert!(s.is_scalar());
        let c = GageSpace::from_json(r#"{"kind":"coordinate","dim":3}"#).unwrap();
        assert_eq!(c.num_pseudometrics(), 3);
        let f = GageSpace::from_json(
            r#"{"kind":"finite","points":["x","y"],"metrics":[[[0,1],[1,0]],[[0,2],[2,0]]],"candidates":["y"]}"#,
        )
        .unwrap();
        assert_eq!(f.num_pseudometrics(), 2);
        assert_eq!(f.candidates().unwrap(), &[Point::Index(1)]);
        let again = f.to_config().build().unwrap();
        assert_eq!(again, f);
        assert!(GageSpace::from_json(r#"{"kind":"coordinate","dim":0}"#).is_err());
        assert!(GageSpace::from_json(r#"{"kind":"torus"}"#).is_err());
    }
}

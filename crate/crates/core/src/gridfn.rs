//! Finite grids, sampled functions and the elementary functionals on them:
//! Jordan variation, oscillation, uniform distance and restriction.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gage::{GageSpace, Point, PseudometricId};

/// Strictly increasing finite list of reals. Cloning and restricting share
/// the underlying storage.
#[derive(Clone, Debug)]
pub struct Grid {
    points: Arc<[f64]>,
    start: usize,
    end: usize,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(i) = points.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::GridNotIncreasing { index: i + 1 });
        }
        let end = points.len();
        Ok(Grid {
            points: points.into(),
            start: 0,
            end,
        })
    }

    /// `n` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::EmptyGrid),
            1 => Grid::new(vec![a]),
            _ => {
                let h = (b - a) / (n - 1) as f64;
                let mut pts: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
                pts[n - 1] = b;
                Grid::new(pts)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points[self.start..self.end]
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> f64 {
        self.points()[0]
    }

    pub fn last(&self) -> f64 {
        self.points()[self.len() - 1]
    }

    /// Position of `t` in the grid, if it is a grid point.
    pub fn position(&self, t: f64) -> Option<usize> {
        self.points().binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// Relative index range of the grid points inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> Range<usize> {
        let pts = self.points();
        let a = pts.partition_point(|&t| t < lo);
        let b = pts.partition_point(|&t| t <= hi);
        a..b.max(a)
    }

    pub fn is_subset_of(&self, other: &Grid) -> bool {
        self.points().iter().all(|&t| other.position(t).is_some())
    }

    fn slice(&self, r: Range<usize>) -> Grid {
        Grid {
            points: Arc::clone(&self.points),
            start: self.start + r.start,
            end: self.start + r.end,
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points() == other.points()
    }
}

/// One value of a [`GageSpace`] per grid point.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    grid: Grid,
    values: Arc<[Point]>,
    space: Arc<GageSpace>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Point>, space: Arc<GageSpace>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for v in &values {
            space.validate_point(v)?;
        }
        let grid = if grid.start == 0 && grid.end == grid.points.len() {
            grid
        } else {
            Grid::new(grid.points().to_vec())?
        };
        Ok(SampledFunction {
            grid,
            values: values.into(),
            space,
        })
    }

    /// Real-valued function on the scalar space.
    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(
            grid,
            values.into_iter().map(Point::Real).collect(),
            Arc::new(GageSpace::scalar()),
        )
    }

    /// Scalar function on the grid `0, 1, ..., n-1`.
    pub fn scalar_indexed(values: Vec<f64>) -> Result<Self> {
        let grid = Grid::new((0..values.len()).map(|i| i as f64).collect())?;
        Self::scalar(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Point] {
        &self.values[self.grid.start..self.grid.end]
    }

    pub fn space(&self) -> &GageSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<GageSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Coordinate `p` of every value (scalar or coordinate spaces only).
    pub fn component(&self, p: usize) -> Option<Vec<f64>> {
        self.values().iter().map(|v| v.coordinate(p)).collect()
    }

    /// Same grid and space, new values.
    pub fn with_values(&self, values: Vec<Point>) -> Result<Self> {
        Self::new(self.grid.clone(), values, Arc::clone(&self.space))
    }

    pub fn same_domain(&self, other: &SampledFunction) -> bool {
        self.grid == other.grid && *self.space == *other.space
    }

    pub(crate) fn slice(&self, r: Range<usize>) -> SampledFunction {
        SampledFunction {
            grid: self.grid.slice(r),
            values: Arc::clone(&self.values),
            space: Arc::clone(&self.space),
        }
    }

    /// Restriction to the first `i + 1` grid points.
    pub fn prefix(&self, i: usize) -> SampledFunction {
        self.slice(0..i + 1)
    }

    /// Restriction to grid points from index `i` on.
    pub fn suffix(&self, i: usize) -> SampledFunction {
        self.slice(i..self.len())
    }
}

pub fn jordan_variation(f: &SampledFunction, p: PseudometricId) -> Result<f64> {
    f.space().check_pseudometric(p)?;
    let s = f.space();
    Ok(f.values().windows(2).map(|w| s.d(p.0, &w[0], &w[1])).sum())
}

pub fn oscillation(f: &SampledFunction, p: PseudometricId) -> Result<f64> {
    f.space().check_pseudometric(p)?;
    if let Some(c) = f.component(p.0) {
        let (lo, hi) = c
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        return Ok(hi - lo);
    }
    let vals = f.values();
    let s = f.space();
    let mut best = 0.0f64;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            best = best.max(s.d(p.0, &vals[i], &vals[j]));
        }
    }
    Ok(best)
}

pub fn uniform_distance(f: &SampledFunction, g: &SampledFunction, p: PseudometricId) -> Result<f64> {
    if !f.same_domain(g) {
        return Err(Error::DomainMismatch);
    }
    f.space().check_pseudometric(p)?;
    let s = f.space();
    Ok(f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| s.d(p.0, a, b))
        .fold(0.0, f64::max))
}

/// Restriction to the grid points in `[lo, hi]`; infinite bounds give the
/// half-lines `T ∩ (-inf, t]` and `T ∩ [t, inf)`.
pub fn restrict(f: &SampledFunction, lo: f64, hi: f64) -> Result<SampledFunction> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::EmptyRestriction { lo, hi });
    }
    let r = f.grid().index_range(lo, hi);
    if r.is_empty() {
        return Err(Error::EmptyRestriction { lo, hi });
    }
    Ok(f.slice(r))
}

/// Variation of `f` on each prefix `T ∩ (-inf, t_i]`.
pub fn prefix_variation(f: &SampledFunction, p: PseudometricId) -> Result<Vec<f64>> {
    f.space().check_pseudometric(p)?;
    let s = f.space();
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.values().windows(2) {
        acc += s.d(p.0, &w[0], &w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// `true` at even positions, `false` at odd ones.
pub fn alternating_mask(n: usize) -> Vec<bool> {
    (0..n).map(|i| i % 2 == 0).collect()
}

/// Takes `x` where the mask is set ("rational" points) and `y` elsewhere.
pub fn gen_dirichlet(
    grid: Grid,
    x: Point,
    y: Point,
    rational_mask: &[bool],
    space: Arc<GageSpace>,
) -> Result<SampledFunction> {
    if rational_mask.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: rational_mask.len(),
        });
    }
    let values = rational_mask
        .iter()
        .map(|&r| if r { x.clone() } else { y.clone() })
        .collect();
    SampledFunction::new(grid, values, space)
}

pub const MAX_FACTORIAL_ORDER: usize = 8;

pub fn factorial(j: usize) -> usize {
    (1..=j).product()
}

/// Step function on `[0, 1]` equal to `x` at the multiples of `1/j!` and
/// `y` elsewhere. With `include_midpoints` the grid also holds every
/// `(k - 1/2)/j!`, otherwise only the multiples.
pub fn gen_factorial_step(
    j: usize,
    include_midpoints: bool,
    x: Point,
    y: Point,
    space: Arc<GageSpace>,
) -> Result<SampledFunction> {
    if j == 0 || j > MAX_FACTORIAL_ORDER {
        return Err(Error::OrderTooLarge(j));
    }
    let m = factorial(j);
    let denom = m as f64;
    let mut t = Vec::with_capacity(2 * m + 1);
    let mut v = Vec::with_capacity(2 * m + 1);
    for k in 0..=m {
        if include_midpoints && k > 0 {
            t.push((k as f64 - 0.5) / denom);
            v.push(y.clone());
        }
        t.push(k as f64 / denom);
        v.push(x.clone());
    }
    SampledFunction::new(Grid::new(t)?, v, space)
}

/// Scalar function interpolating linearly (in index) from `v0` to `v1`.
pub fn gen_monotone_ramp(grid: Grid, v0: f64, v1: f64) -> SampledFunction {
    let n = grid.len();
    let values = (0..n)
        .map(|i| {
            if n == 1 {
                v0
            } else if i == n - 1 {
                v1
            } else {
                v0 + (v1 - v0) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    SampledFunction::scalar(grid, values).expect("ramp values are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P0: PseudometricId = PseudometricId(0);

    fn sf(v: &[f64]) -> SampledFunction {
        SampledFunction::scalar_indexed(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(Grid::new(vec![]), Err(Error::EmptyGrid)));
        assert!(matches!(
            Grid::new(vec![0.0, 1.0, 1.0]),
            Err(Error::GridNotIncreasing { index: 2 })
        ));
        assert!(matches!(
            Grid::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert_eq!(Grid::uniform(0.0, 1.0, 3).unwrap().points(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn jordan_examples() {
        assert_eq!(jordan_variation(&sf(&[0.0, 1.0, 0.0, 1.0]), P0).unwrap(), 3.0);
        assert_eq!(jordan_variation(&sf(&[7.0]), P0).unwrap(), 0.0);
        assert_eq!(jordan_variation(&sf(&[0.0, 2.0, 0.0]), P0).unwrap(), 4.0);
        assert!(jordan_variation(&sf(&[0.0]), PseudometricId(1)).is_err());
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillation(&sf(&[0.0, 2.0, 0.0]), P0).unwrap(), 2.0);
        assert_eq!(oscillation(&sf(&[3.0, 3.0]), P0).unwrap(), 0.0);
        let space = Arc::new(GageSpace::coordinate(2).unwrap());
        let f = SampledFunction::new(
            Grid::new(vec![0.0, 1.0]).unwrap(),
            vec![Point::Vector(vec![0.0, 0.0]), Point::Vector(vec![1.0, 5.0])],
            space,
        )
        .unwrap();
        assert_eq!(oscillation(&f, P0).unwrap(), 1.0);
        assert_eq!(oscillation(&f, PseudometricId(1)).unwrap(), 5.0);
    }

    #[test]
    fn uniform_distance_examples() {
        let f = sf(&[0.0, 2.0, 0.0]);
        assert_eq!(uniform_distance(&f, &f, P0).unwrap(), 0.0);
        assert_eq!(uniform_distance(&f, &sf(&[0.5, 1.5, 0.5]), P0).unwrap(), 0.5);
        assert_eq!(uniform_distance(&sf(&[0.0, 1.0]), &sf(&[1.0, 0.0]), P0).unwrap(), 1.0);
        assert!(matches!(
            uniform_distance(&f, &sf(&[0.0, 1.0]), P0),
            Err(Error::DomainMismatch)
        ));
    }

    #[test]
    fn restrict_examples() {
        let f = sf(&[5.0, 6.0, 7.0]);
        let r = restrict(&f, 0.0, 1.0).unwrap();
        assert_eq!(r.grid().points(), &[0.0, 1.0]);
        assert_eq!(r.values(), &[Point::Real(5.0), Point::Real(6.0)]);
        let single = restrict(&f, 1.0, 1.0).unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(restrict(&f, 0.5, 0.7), Err(Error::EmptyRestriction { .. })));
        let suffix = restrict(&f, 1.0, f64::INFINITY).unwrap();
        assert_eq!(suffix.grid().points(), &[1.0, 2.0]);
        // restriction shares the value storage
        assert!(Arc::ptr_eq(&suffix.values, &f.values));
    }

    #[test]
    fn prefix_variation_examples() {
        assert_eq!(
            prefix_variation(&sf(&[0.0, 1.0, 0.0]), P0).unwrap(),
            vec![0.0, 1.0, 2.0]
        );
        assert_eq!(prefix_variation(&sf(&[4.0, 4.0]), P0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            prefix_variation(&sf(&[0.0, 2.0, 0.0, 3.0]), P0).unwrap(),
            vec![0.0, 2.0, 4.0, 7.0]
        );
    }

    #[test]
    fn dirichlet_generator() {
        let space = Arc::new(GageSpace::scalar());
        let grid = Grid::uniform(0.0, 1.0, 5).unwrap();
        let all = gen_dirichlet(
            grid.clone(),
            Point::Real(0.0),
            Point::Real(1.0),
            &[true; 5],
            Arc::clone(&space),
        )
        .unwrap();
        assert_eq!(jordan_variation(&all, P0).unwrap(), 0.0);
        let alt = gen_dirichlet(
            grid.clone(),
            Point::Real(0.0),
            Point::Real(1.0),
            &alternating_mask(5),
            Arc::clone(&space),
        )
        .unwrap();
        assert_eq!(jordan_variation(&alt, P0).unwrap(), 4.0);
        assert!(gen_dirichlet(grid, Point::Real(0.0), Point::Real(1.0), &[true], space).is_err());
    }

    #[test]
    fn factorial_step_generator() {
        let space = Arc::new(GageSpace::two_point(1.0).unwrap());
        let (x, y) = (Point::Index(0), Point::Index(1));
        let f1 = gen_factorial_step(1, true, x.clone(), y.clone(), Arc::clone(&space)).unwrap();
        assert_eq!(f1.grid().points(), &[0.0, 0.5, 1.0]);
        assert_eq!(f1.values(), &[x.clone(), y.clone(), x.clone()]);
        let f2 = gen_factorial_step(2, true, x.clone(), y.clone(), Arc::clone(&space)).unwrap();
        assert_eq!(f2.values(), &[x.clone(), y.clone(), x.clone(), y.clone(), x.clone()]);
        let f1n = gen_factorial_step(1, false, x.clone(), y.clone(), Arc::clone(&space)).unwrap();
        assert_eq!(f1n.values(), &[x.clone(), x.clone()]);
        assert!(matches!(
            gen_factorial_step(9, true, x, y, space),
            Err(Error::OrderTooLarge(9))
        ));
    }

    #[test]
    fn ramp_generator() {
        let r = gen_monotone_ramp(Grid::uniform(0.0, 1.0, 4).unwrap(), 0.0, 3.0);
        assert_eq!(r.component(0).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        let c = gen_monotone_ramp(Grid::uniform(0.0, 1.0, 3).unwrap(), 2.0, 2.0);
        assert_eq!(c.component(0).unwrap(), vec![2.0, 2.0, 2.0]);
        let two = gen_monotone_ramp(Grid::uniform(0.0, 1.0, 2).unwrap(), 0.0, 5.0);
        assert_eq!(two.component(0).unwrap(), vec![0.0, 5.0]);
    }
}

//! Driving forces `f(x, t)` from closed-form families with known Lipschitz
//! constants and sup bounds.

use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForcingError {
    #[error("tent radius must be positive, got {0}")]
    Radius(f64),
    #[error("plateau needs 0 <= inner < outer, got inner={inner} outer={outer}")]
    Plateau { inner: f64, outer: f64 },
    #[error("tabulated forcing needs at least two strictly increasing abscissae")]
    Table,
    #[error("tabulated forcing is one-dimensional")]
    TableDimension,
    #[error("piecewise-constant time profile needs one more scale than breakpoints, increasing breakpoints")]
    TimeProfile,
    #[error("non-finite forcing parameter")]
    NonFinite,
}

/// `c·max(0, 1 − |x − center|/r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tent {
    pub c: f64,
    pub r: f64,
    pub center: [f64; 2],
}

impl Tent {
    #[inline]
    fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        let d = if dim == 1 {
            (x[0] - self.center[0]).abs()
        } else {
            (x[0] - self.center[0]).hypot(x[1] - self.center[1])
        };
        self.c * (1.0 - d / self.r).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Zero,
    Tent(Tent),
    /// `c` on `|x − center| ≤ inner`, linear down to 0 at `outer`.
    Plateau { c: f64, inner: f64, outer: f64, center: [f64; 2] },
    SumOfTents(Vec<Tent>),
    /// Piecewise-linear interpolation of `(x, value)` nodes, constant beyond the ends.
    Tabulated { x: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Static,
    /// Scale `scales[k]` on the `k`-th interval cut out by `breaks`.
    PiecewiseConstant { breaks: Vec<f64>, scales: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Empty,
    Interval(f64, f64),
    Unbounded,
}

/// `f(x, t) = s(t)·shape(x) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    dim: usize,
    shape: Shape,
    offset: f64,
    time: TimeProfile,
}

impl Forcing {
    pub fn new(dim: usize, shape: Shape) -> Result<Self, ForcingError> {
        let check_tent = |t: &Tent| {
            if ![t.c, t.r, t.center[0], t.center[1]].iter().all(|v| v.is_finite()) {
                return Err(ForcingError::NonFinite);
            }
            if t.r <= 0.0 {
                return Err(ForcingError::Radius(t.r));
            }
            Ok(())
        };
        match &shape {
            Shape::Zero => {}
            Shape::Tent(t) => check_tent(t)?,
            Shape::SumOfTents(ts) => ts.iter().try_for_each(check_tent)?,
            Shape::Plateau { c, inner, outer, .. } => {
                if !c.is_finite() || !(0.0 <= *inner && inner < outer && outer.is_finite()) {
                    return Err(ForcingError::Plateau { inner: *inner, outer: *outer });
                }
            }
            Shape::Tabulated { x, values } => {
                if dim != 1 {
                    return Err(ForcingError::TableDimension);
                }
                if x.len() < 2 || x.len() != values.len() || x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ForcingError::Table);
                }
                if x.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(ForcingError::NonFinite);
                }
            }
        }
        Ok(Self { dim, shape, offset: 0.0, time: TimeProfile::Static })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, shape: Shape::Zero, offset: 0.0, time: TimeProfile::Static }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::zero(dim).with_offset(c)
    }

    /// One-dimensional tent `c·max(0, 1 − |x − center|/r)`.
    pub fn tent_1d(c: f64, r: f64, center: f64) -> Result<Self, ForcingError> {
        Self::new(1, Shape::Tent(Tent { c, r, center: [center, 0.0] }))
    }

    pub fn tent_2d(c: f64, r: f64, center: [f64; 2]) -> Result<Self, ForcingError> {
        Self::new(2, Shape::Tent(Tent { c, r, center }))
    }

    /// Adds a constant to the forcing.
    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    pub fn with_time_profile(mut self, time: TimeProfile) -> Result<Self, ForcingError> {
        if let TimeProfile::PiecewiseConstant { breaks, scales } = &time {
            if scales.len() != breaks.len() + 1 || breaks.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ForcingError::TimeProfile);
            }
            if breaks.iter().chain(scales).any(|v| !v.is_finite()) {
                return Err(ForcingError::NonFinite);
            }
        }
        self.time = time;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_static(&self) -> bool {
        match &self.time {
            TimeProfile::Static => true,
            TimeProfile::PiecewiseConstant { scales, .. } => scales.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && self.sup_shape() == 0.0
    }

    fn time_scale(&self, t: f64) -> f64 {
        match &self.time {
            TimeProfile::Static => 1.0,
            TimeProfile::PiecewiseConstant { breaks, scales } => {
                scales[breaks.iter().take_while(|&&b| b <= t).count()]
            }
        }
    }

    fn max_time_scale(&self) -> f64 {
        match &self.time {
            TimeProfile::Static => 1.0,
            TimeProfile::PiecewiseConstant { scales, .. } => scales.iter().map(|s| s.abs()).fold(0.0, f64::max),
        }
    }

    #[inline]
    fn shape_at(&self, x: [f64; 2]) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Tent(t) => t.eval(x, self.dim),
            Shape::SumOfTents(ts) => ts.iter().map(|t| t.eval(x, self.dim)).sum(),
            Shape::Plateau { c, inner, outer, center } => {
                let d = if self.dim == 1 {
                    (x[0] - center[0]).abs()
                } else {
                    (x[0] - center[0]).hypot(x[1] - center[1])
                };
                c * ((outer - d) / (outer - inner)).clamp(0.0, 1.0)
            }
            Shape::Tabulated { x: xs, values } => interp(xs, values, x[0]),
        }
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        self.time_scale(t) * self.shape_at(x) + self.offset
    }

    /// `f(x, 0)` for a one-dimensional forcing.
    pub fn at(&self, x: f64) -> f64 {
        self.eval([x, 0.0], 0.0)
    }

    fn sup_shape(&self) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::Tent(t) => t.c.abs(),
            Shape::SumOfTents(ts) => ts.iter().map(|t| t.c.abs()).sum(),
            Shape::Plateau { c, .. } => c.abs(),
            Shape::Tabulated { values, .. } => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    /// Upper bound on `sup |f|` over space and time.
    pub fn sup_bound(&self) -> f64 {
        self.max_time_scale() * self.sup_shape() + self.offset.abs()
    }

    /// Spatial Lipschitz constant `L_f`, uniform in time.
    pub fn lipschitz(&self) -> f64 {
        let l = match &self.shape {
            Shape::Zero => 0.0,
            Shape::Tent(t) => t.c.abs() / t.r,
            Shape::SumOfTents(ts) => ts.iter().map(|t| t.c.abs() / t.r).sum(),
            Shape::Plateau { c, inner, outer, .. } => c.abs() / (outer - inner),
            Shape::Tabulated { x, values } => x
                .windows(2)
                .zip(values.windows(2))
                .map(|(xw, vw)| ((vw[1] - vw[0]) / (xw[1] - xw[0])).abs())
                .fold(0.0, f64::max),
        };
        self.max_time_scale() * l
    }

    /// Support of `f(·, 0)` in one dimension (first coordinate for 2D shapes).
    pub fn support_1d(&self) -> Support {
        if self.offset != 0.0 {
            return Support::Unbounded;
        }
        let tent = |t: &Tent| (t.center[0] - t.r, t.center[0] + t.r);
        let hull = |it: &mut dyn Iterator<Item = (f64, f64)>| {
            it.fold(None, |acc: Option<(f64, f64)>, (a, b)| match acc {
                None => Some((a, b)),
                Some((lo, hi)) => Some((lo.min(a), hi.max(b))),
            })
        };
        let iv = match &self.shape {
            Shape::Zero => None,
            Shape::Tent(t) if t.c != 0.0 => Some(tent(t)),
            Shape::Tent(_) => None,
            Shape::SumOfTents(ts) => hull(&mut ts.iter().filter(|t| t.c != 0.0).map(tent)),
            Shape::Plateau { c, outer, center, .. } if *c != 0.0 => Some((center[0] - outer, center[0] + outer)),
            Shape::Plateau { .. } => None,
            Shape::Tabulated { x, values } => {
                if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
                    return Support::Unbounded;
                }
                let nz: Vec<usize> = (0..values.len()).filter(|&k| values[k] != 0.0).collect();
                match (nz.first(), nz.last()) {
                    (Some(&a), Some(&b)) => Some((x[a - 1], x[b + 1])),
                    _ => None,
                }
            }
        };
        match iv {
            None => Support::Empty,
            Some((a, b)) => Support::Interval(a, b),
        }
    }

    /// Composite trapezoid rule for `∫_a^b f(x, 0) dx`.
    pub fn integrate_1d(&self, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut s = 0.5 * (self.at(a) + self.at(b));
        for k in 1..panels {
            s += self.at(a + k as f64 * h);
        }
        s * h
    }

    /// Per-cell forcing used by the discrete energies: the mean of `f` over
    /// the cell corners (cell edges in 1D), so cumulative sums along a line
    /// reproduce the trapezoid rule.
    pub fn cell_values(&self, grid: &Grid, t: f64) -> Vec<f64> {
        let h = grid.h;
        (0..grid.len())
            .map(|k| {
                let c = grid.center_of(k);
                if grid.dim == 1 {
                    0.5 * (self.eval([c[0] - 0.5 * h, 0.0], t) + self.eval([c[0] + 0.5 * h, 0.0], t))
                } else {
                    let mut s = 0.0;
                    for dx in [-0.5, 0.5] {
                        for dy in [-0.5, 0.5] {
                            s += self.eval([c[0] + dx * h, c[1] + dy * h], t);
                        }
                    }
                    0.25 * s
                }
            })
            .collect()
    }

    /// `f(x_k, t)` at every cell center.
    pub fn center_values(&self, grid: &Grid, t: f64) -> Vec<f64> {
        (0..grid.len()).map(|k| self.eval(grid.center_of(k), t)).collect()
    }
}

fn interp(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return vs[0];
    }
    if x >= xs[xs.len() - 1] {
        return vs[vs.len() - 1];
    }
    let k = xs.partition_point(|&a| a <= x) - 1;
    let s = (x - xs[k]) / (xs[k + 1] - xs[k]);
    vs[k] + s * (vs[k + 1] - vs[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values_and_constants() {
        let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
        assert_eq!(f.at(0.0), 3.0);
        assert_eq!(f.at(0.5), 1.5);
        assert_eq!(f.at(2.0), 0.0);
        assert_eq!(f.lipschitz(), 3.0);
        assert_eq!(f.sup_bound(), 3.0);
        assert_eq!(f.support_1d(), Support::Interval(-1.0, 1.0));
        // panel count even, so the kink at 0 is a node and the rule is exact
        assert!((f.integrate_1d(-1.0, 1.0, 64) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn offset_and_time_profile() {
        let f = Forcing::tent_1d(1.0, 1.0, 0.0)
            .unwrap()
            .with_offset(0.5)
            .with_time_profile(TimeProfile::PiecewiseConstant { breaks: vec![1.0], scales: vec![1.0, -2.0] })
            .unwrap();
        assert_eq!(f.eval([0.0, 0.0], 0.5), 1.5);
        assert_eq!(f.eval([0.0, 0.0], 1.5), -1.5);
        assert_eq!(f.sup_bound(), 2.5);
        assert_eq!(f.lipschitz(), 2.0);
        assert_eq!(f.support_1d(), Support::Unbounded);
        assert!(!f.is_static());
    }

    #[test]
    fn tabulated_interpolates() {
        let f = Forcing::new(1, Shape::Tabulated { x: vec![0.0, 1.0, 3.0], values: vec![0.0, 2.0, 0.0] }).unwrap();
        assert_eq!(f.at(0.5), 1.0);
        assert_eq!(f.at(2.0), 1.0);
        assert_eq!(f.at(5.0), 0.0);
        assert_eq!(f.lipschitz(), 2.0);
        assert_eq!(f.support_1d(), Support::Interval(0.0, 3.0));
        assert!(Forcing::new(2, Shape::Tabulated { x: vec![0.0, 1.0], values: vec![0.0, 0.0] }).is_err());
    }

    #[test]
    fn sampled_lipschitz_within_reported() {
        let f = Forcing::new(
            2,
            Shape::SumOfTents(vec![
                Tent { c: 1.0, r: 0.3, center: [0.1, 0.0] },
                Tent { c: -2.0, r: 0.5, center: [-0.2, 0.4] },
            ]),
        )
        .unwrap();
        let g = Grid::square(40, -1.0, 1.0).unwrap();
        let v = f.center_values(&g, 0.0);
        let l = f.lipschitz();
        for j in 0..40 {
            for i in 0..39 {
                let d = (v[g.index(i + 1, j)] - v[g.index(i, j)]).abs() / g.h;
                assert!(d <= l + 1e-12);
            }
        }
        assert!(v.iter().all(|x| x.abs() <= f.sup_bound()));
    }
}

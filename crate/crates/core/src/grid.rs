//! Uniform cell-centered grids in one and two dimensions.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("unsupported dimension {0}: only 1 and 2 are supported")]
    Dimension(usize),
    #[error("grid needs at least one cell per axis")]
    Empty,
    #[error("grid spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("boundary layer cell {0} does not hold the exterior value")]
    ExteriorLayer(usize),
}

/// Cell `i` along an axis has center `lo + (i + 1/2)·h`. The second axis is
/// unused (length 1) in one dimension. Storage is row-major with the first
/// axis fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: [usize; 2],
    pub h: f64,
    pub lo: [f64; 2],
}

impl Grid {
    pub fn new(dim: usize, n: [usize; 2], h: f64, lo: [f64; 2]) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::Dimension(dim));
        }
        let n = if dim == 1 { [n[0], 1] } else { n };
        if n[0] == 0 || n[1] == 0 {
            return Err(GridError::Empty);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::Spacing(h));
        }
        Ok(Self { dim, n, h, lo: if dim == 1 { [lo[0], 0.0] } else { lo } })
    }

    /// `n` cells covering `[lo, lo + n·h)`.
    pub fn line(n: usize, lo: f64, hi: f64) -> Result<Self, GridError> {
        Self::new(1, [n, 1], (hi - lo) / n as f64, [lo, 0.0])
    }

    /// `n × n` cells covering the square `[lo, hi]²`.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self, GridError> {
        Self::new(2, [n, n], (hi - lo) / n as f64, [lo, lo])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n[0], k / self.n[0])
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let x = self.lo[0] + (i as f64 + 0.5) * self.h;
        if self.dim == 1 {
            [x, 0.0]
        } else {
            [x, self.lo[1] + (j as f64 + 0.5) * self.h]
        }
    }

    pub fn center_of(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.coords(k);
        self.center(i, j)
    }

    pub fn hi(&self) -> [f64; 2] {
        [
            self.lo[0] + self.n[0] as f64 * self.h,
            self.lo[1] + self.n[1] as f64 * self.h,
        ]
    }

    /// Volume element `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// True when the cell lies within `width` cells of the box edge.
    pub fn in_band(&self, k: usize, width: usize) -> bool {
        let (i, j) = self.coords(k);
        let near = |c: usize, n: usize| c < width || c + width >= n;
        near(i, self.n[0]) || (self.dim == 2 && near(j, self.n[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Indices wrap around; the grid is a discrete torus.
    Periodic,
    /// Cells outside the box hold this value.
    Exterior(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub boundary: Boundary,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, boundary: Boundary, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(Self { grid, boundary, values })
    }

    pub fn from_fn(grid: Grid, boundary: Boundary, f: impl Fn([f64; 2]) -> f64) -> Result<Self, GridError> {
        let values = (0..grid.len()).map(|k| f(grid.center_of(k))).collect();
        Self::new(grid, boundary, values)
    }

    pub fn constant(grid: Grid, boundary: Boundary, c: f64) -> Result<Self, GridError> {
        Self::new(grid, boundary, vec![c; grid.len()])
    }

    /// Checks that a constant-exterior field holds its exterior value on the
    /// outermost cell layer.
    pub fn check_exterior_layer(&self) -> Result<(), GridError> {
        if let Boundary::Exterior(c) = self.boundary {
            for k in 0..self.values.len() {
                if self.grid.in_band(k, 1) && self.values[k] != c {
                    return Err(GridError::ExteriorLayer(k));
                }
            }
        }
        Ok(())
    }

    /// Value at a possibly out-of-range cell index, resolved by the boundary rule.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let n0 = self.grid.n[0] as isize;
        let n1 = self.grid.n[1] as isize;
        match self.boundary {
            Boundary::Periodic => {
                let i = i.rem_euclid(n0) as usize;
                let j = j.rem_euclid(n1) as usize;
                self.values[self.grid.index(i, j)]
            }
            Boundary::Exterior(c) => {
                if i < 0 || j < 0 || i >= n0 || j >= n1 {
                    c
                } else {
                    self.values[self.grid.index(i as usize, j as usize)]
                }
            }
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest difference quotient over axis and diagonal neighbor pairs.
    pub fn lipschitz(&self) -> f64 {
        let g = &self.grid;
        let h = g.h;
        let offsets: &[(isize, isize, f64)] = if g.dim == 1 {
            &[(1, 0, 1.0)]
        } else {
            &[(1, 0, 1.0), (0, 1, 1.0), (1, 1, std::f64::consts::SQRT_2), (1, -1, std::f64::consts::SQRT_2)]
        };
        let periodic = matches!(self.boundary, Boundary::Periodic);
        let mut lip: f64 = 0.0;
        for j in 0..g.n[1] as isize {
            for i in 0..g.n[0] as isize {
                let u = self.values[g.index(i as usize, j as usize)];
                for &(di, dj, len) in offsets {
                    let (a, b) = (i + di, j + dj);
                    // neighbors across an open box edge are exterior ghost cells,
                    // which are not part of the field
                    if !periodic && (a < 0 || b < 0 || a >= g.n[0] as isize || b >= g.n[1] as isize) {
                        continue;
                    }
                    lip = lip.max((self.at(a, b) - u).abs() / (len * h));
                }
            }
        }
        lip
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_indices() {
        let g = Grid::square(4, -1.0, 1.0).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.center(0, 0), [-0.75, -0.75]);
        assert_eq!(g.center(3, 1), [0.75, -0.25]);
        assert_eq!(g.coords(g.index(2, 3)), (2, 3));
    }

    #[test]
    fn periodic_wrap_and_exterior() {
        let g = Grid::line(4, 0.0, 1.0).unwrap();
        let p = ScalarField::new(g, Boundary::Periodic, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.at(-1, 0), 4.0);
        assert_eq!(p.at(4, 0), 1.0);
        let e = ScalarField::new(g, Boundary::Exterior(9.0), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.at(-1, 0), 9.0);
        assert!(e.check_exterior_layer().is_err());
    }

    #[test]
    fn lipschitz_of_cone_is_one() {
        let g = Grid::square(64, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, Boundary::Exterior(0.5), |x| (x[0].hypot(x[1]) - 0.5).min(0.5)).unwrap();
        let lip = u.lipschitz();
        assert!(lip <= 1.0 + 1e-12 && lip > 0.95, "{lip}");
    }

    #[test]
    fn rejects_nan() {
        let g = Grid::line(2, 0.0, 1.0).unwrap();
        assert_eq!(
            ScalarField::new(g, Boundary::Periodic, vec![0.0, f64::NAN]).unwrap_err(),
            GridError::NonFinite(1)
        );
    }
}

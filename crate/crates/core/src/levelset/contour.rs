//! Level sets of grid functions: interval endpoints in 1D, marching squares
//! over cell centers in 2D.

use std::collections::HashMap;

use thiserror::Error;

use crate::grid::ScalarField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("level {c} is outside the open range ({min}, {max})")]
    OutOfRange { c: f64, min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelSet {
    /// Crossing points along the line, in increasing order.
    Points(Vec<f64>),
    Polylines(Vec<Polyline>),
}

impl LevelSet {
    /// All contour vertices as points in the plane.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            LevelSet::Points(x) => x.iter().map(|&x| [x, 0.0]).collect(),
            LevelSet::Polylines(ls) => ls.iter().flat_map(|l| l.points.iter().copied()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            LevelSet::Points(x) => x.is_empty(),
            LevelSet::Polylines(ls) => ls.is_empty(),
        }
    }
}

/// The level set `{u = c}` by linear interpolation between cell centers.
pub fn extract_level_set(u: &ScalarField, c: f64) -> Result<LevelSet, ContourError> {
    let (min, max) = (u.min(), u.max());
    if !(min < c && c < max) {
        return Err(ContourError::OutOfRange { c, min, max });
    }
    let g = &u.grid;
    if g.dim == 1 {
        let mut pts = Vec::new();
        for i in 0..g.n[0] - 1 {
            let (a, b) = (u.values[i] - c, u.values[i + 1] - c);
            if (a < 0.0) != (b < 0.0) {
                let s = a / (a - b);
                pts.push(g.center(i, 0)[0] + s * g.h);
            }
        }
        return Ok(LevelSet::Points(pts));
    }
    Ok(LevelSet::Polylines(marching_squares(u, c)))
}

/// Grid edge between two cell centers, used to stitch segments together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

fn marching_squares(u: &ScalarField, c: f64) -> Vec<Polyline> {
    let g = &u.grid;
    let (n0, n1) = (g.n[0], g.n[1]);
    let val = |i: usize, j: usize| u.values[g.index(i, j)] - c;
    let point = |e: EdgeId| -> [f64; 2] {
        let (p, q, a, b) = match e {
            EdgeId::H(i, j) => (g.center(i, j), g.center(i + 1, j), val(i, j), val(i + 1, j)),
            EdgeId::V(i, j) => (g.center(i, j), g.center(i, j + 1), val(i, j), val(i, j + 1)),
        };
        let s = a / (a - b);
        [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
    };
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..n1.saturating_sub(1) {
        for i in 0..n0.saturating_sub(1) {
            let v = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            let inside = v.map(|x| x < 0.0);
            let case = inside.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // edges of the square: bottom, right, top, left
            let e = [EdgeId::H(i, j), EdgeId::V(i + 1, j), EdgeId::H(i, j + 1), EdgeId::V(i, j)];
            match case {
                1 | 14 => segments.push((e[3], e[0])),
                2 | 13 => segments.push((e[0], e[1])),
                3 | 12 => segments.push((e[3], e[1])),
                4 | 11 => segments.push((e[1], e[2])),
                6 | 9 => segments.push((e[0], e[2])),
                7 | 8 => segments.push((e[3], e[2])),
                5 | 10 => {
                    // saddle: the mean of the corners decides which corners connect
                    let center_inside = (v[0] + v[1] + v[2] + v[3]) * 0.25 < 0.0;
                    let diag02 = (case == 5) == center_inside;
                    if diag02 {
                        segments.push((e[3], e[2]));
                        segments.push((e[0], e[1]));
                    } else {
                        segments.push((e[3], e[0]));
                        segments.push((e[1], e[2]));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    chain(&segments, point)
}

fn chain(segments: &[(EdgeId, EdgeId)], point: impl Fn(EdgeId) -> [f64; 2]) -> Vec<Polyline> {
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let next = |edge: EdgeId, used: &[bool]| by_edge[&edge].iter().copied().find(|&s| !used[s]);
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut forward = vec![a, b];
        let mut cur = b;
        while let Some(s) = next(cur, &used) {
            used[s] = true;
            let (p, q) = segments[s];
            cur = if p == cur { q } else { p };
            forward.push(cur);
        }
        let closed = forward.len() > 2 && forward[0] == *forward.last().unwrap();
        if !closed {
            // extend backwards from the starting edge
            let mut back = Vec::new();
            let mut cur = a;
            while let Some(s) = next(cur, &used) {
                used[s] = true;
                let (p, q) = segments[s];
                cur = if p == cur { q } else { p };
                back.push(cur);
            }
            back.reverse();
            back.extend(forward);
            forward = back;
        } else {
            forward.pop();
        }
        lines.push(Polyline { points: forward.into_iter().map(&point).collect(), closed });
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};

    #[test]
    fn circle_contour_is_closed_and_round() {
        let g = Grid::square(64, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, Boundary::Exterior(1.0), |x| x[0].hypot(x[1]) - 0.5).unwrap();
        let LevelSet::Polylines(ls) = extract_level_set(&u, 0.0).unwrap() else { panic!() };
        assert_eq!(ls.len(), 1);
        assert!(ls[0].closed);
        for p in &ls[0].points {
            assert!((p[0].hypot(p[1]) - 0.5).abs() < 2e-3);
        }
    }

    #[test]
    fn interval_endpoints() {
        let g = Grid::line(100, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, Boundary::Exterior(1.0), |x| x[0].abs() - 0.3).unwrap();
        let LevelSet::Points(p) = extract_level_set(&u, 0.0).unwrap() else { panic!() };
        assert_eq!(p.len(), 2);
        assert!((p[0] + 0.3).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);
        assert!(extract_level_set(&u, 5.0).is_err());
    }

    #[test]
    fn two_components() {
        let g = Grid::square(40, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, Boundary::Exterior(1.0), |x| {
            ((x[0] - 0.5).hypot(x[1]) - 0.2).min((x[0] + 0.5).hypot(x[1]) - 0.2)
        })
        .unwrap();
        let LevelSet::Polylines(ls) = extract_level_set(&u, 0.0).unwrap() else { panic!() };
        assert_eq!(ls.len(), 2);
        assert!(ls.iter().all(|l| l.closed));
    }
}

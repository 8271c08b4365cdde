//! Exact one-dimensional facet speeds for `σ(p) = |p|`.
//!
//! On a facet with cells `s..=t`, the dual field `z` lives on cell edges,
//! is pinned to the transition signs `θ_±` at the two ends and is free in
//! `[−1, 1]` inside. The facet speed `Λ = z′ − f` minimizes `‖Λ‖₂`.
//! Writing `y = z − ∫f` turns this into the shortest path `y` through the tube
//! `Z_− ≤ y ≤ Z_+`, `Z_± = −∫f ± 1`, and `Λ = y′`.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::forcing::{Forcing, Support};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Facet1dError {
    #[error("facet interval must satisfy x_lo < x_hi, got [{0}, {1}]")]
    Interval(f64, f64),
    #[error("facet needs at least one cell")]
    NoCells,
    #[error("transition signs must be -1 or +1, got {0}")]
    Sign(f64),
    #[error("obstacle arrays differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("empty tube at node {0}: lower obstacle above upper")]
    EmptyTube(usize),
    #[error("pinned endpoint at node {0} lies outside the tube")]
    EndpointOutsideTube(usize),
    #[error("forcing must be one-dimensional and static")]
    NotOneDimensional,
    #[error("forcing is not even about 0 (f({x}) != f(-{x}))")]
    NotEven { x: f64 },
    #[error("forcing must have compact support")]
    NoCompactSupport,
    #[error("no interior tangency: total forcing mass ≤ 2 (mass = {mass})")]
    NoInteriorTangency { mass: f64 },
    #[error("facet length root not bracketed in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("facet topology change not resolved at t = {t}")]
    TopologyUnresolved { t: f64 },
    #[error("profile has no sloped edge: every cell belongs to one periodic facet")]
    NoFixedEdge,
    #[error("non-finite value in cell {cell} at t = {t}")]
    NonFinite { cell: usize, t: f64 },
    #[error("invalid time stepping: dt = {dt}, T = {t_end}")]
    TimeStep { dt: f64, t_end: f64 },
}

pub type Result<T> = std::result::Result<T, Facet1dError>;

/// One facet `[x_lo, x_hi]` split into equal cells, with the dual field pinned
/// to `θ_lo` at the left end and `θ_hi` at the right end.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetProblem1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// Forcing per cell.
    pub forcing: Vec<f64>,
}

impl FacetProblem1D {
    pub fn new(x_lo: f64, x_hi: f64, theta_lo: f64, theta_hi: f64, forcing: Vec<f64>) -> Result<Self> {
        if !(x_lo < x_hi) {
            return Err(Facet1dError::Interval(x_lo, x_hi));
        }
        if forcing.is_empty() {
            return Err(Facet1dError::NoCells);
        }
        for th in [theta_lo, theta_hi] {
            if th != 1.0 && th != -1.0 {
                return Err(Facet1dError::Sign(th));
            }
        }
        if let Some(cell) = forcing.iter().position(|v| !v.is_finite()) {
            return Err(Facet1dError::NonFinite { cell, t: 0.0 });
        }
        Ok(Self { x_lo, x_hi, theta_lo, theta_hi, forcing })
    }

    /// Samples `f` on `cells` equal cells; each cell carries the mean of `f`
    /// at its two edges.
    pub fn from_forcing(f: &Forcing, x_lo: f64, x_hi: f64, cells: usize, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Facet1dError::NoCells);
        }
        let h = (x_hi - x_lo) / cells as f64;
        let nodes: Vec<f64> = (0..=cells).map(|j| f.at(x_lo + j as f64 * h)).collect();
        let forcing = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::new(x_lo, x_hi, theta_lo, theta_hi, forcing)
    }

    pub fn cells(&self) -> usize {
        self.forcing.len()
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.cells() as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.cells()).map(|j| self.x_lo + j as f64 * h).collect()
    }

    /// Same facet with the forcing shifted by a constant.
    pub fn shifted(&self, c: f64) -> Self {
        Self { forcing: self.forcing.iter().map(|v| v + c).collect(), ..self.clone() }
    }
}

/// The tube `Z_− ≤ y ≤ Z_+` on the facet nodes together with the pinned
/// endpoint values of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacles {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: f64,
    pub end: f64,
}

/// `Z_±(x) = −∫_{x₀}^x f ± 1` with `x₀` the facet midpoint, plus
/// `y(x_±) = θ_± − ∫_{x₀}^{x_±} f`.
pub fn obstacles(p: &FacetProblem1D) -> Obstacles {
    let n = p.cells();
    let h = p.h();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for (k, fk) in p.forcing.iter().enumerate() {
        cum.push(cum[k] + h * fk);
    }
    let mid = if n.is_multiple_of(2) { cum[n / 2] } else { 0.5 * (cum[n / 2] + cum[n / 2 + 1]) };
    let big_f: Vec<f64> = cum.iter().map(|c| c - mid).collect();
    Obstacles {
        x: p.nodes(),
        lower: big_f.iter().map(|v| -v - 1.0).collect(),
        upper: big_f.iter().map(|v| -v + 1.0).collect(),
        start: p.theta_lo - big_f[0],
        end: p.theta_hi - big_f[n],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TautStringResult {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// The string at the nodes.
    pub y: Vec<f64>,
    /// Per-cell slope of the string: the facet speed `Λ`.
    pub lambda: Vec<f64>,
    /// Interior nodes where the string touches an obstacle.
    pub knots: Vec<usize>,
}

impl TautStringResult {
    pub fn h(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Solves one facet problem exactly.
pub fn solve(p: &FacetProblem1D) -> Result<TautStringResult> {
    let o = obstacles(p);
    taut_string(&o.x, &o.lower, &o.upper, o.start, o.end)
}

/// Shortest path through the tube `lower ≤ y ≤ upper` on equally spaced nodes
/// `x`, pinned to `start` and `end` at the two ends.
///
/// Linear-time funnel sweep: the path from the current apex is bounded by a
/// convex chain under the upper obstacle and a concave chain over the lower
/// one; whenever a new node crosses the opposite chain the apex advances
/// along it.
pub fn taut_string(x: &[f64], lower: &[f64], upper: &[f64], start: f64, end: f64) -> Result<TautStringResult> {
    let n = lower.len();
    if upper.len() != n || x.len() != n {
        return Err(Facet1dError::Length(lower.len(), upper.len().min(x.len())));
    }
    if n < 2 {
        return Err(Facet1dError::NoCells);
    }
    let scale = lower
        .iter()
        .chain(upper)
        .map(|v| v.abs())
        .fold(start.abs().max(end.abs()), f64::max)
        .max(1.0);
    let tol = 1e-12 * scale;
    for k in 0..n {
        if lower[k] > upper[k] + tol {
            return Err(Facet1dError::EmptyTube(k));
        }
    }
    if start < lower[0] - tol || start > upper[0] + tol {
        return Err(Facet1dError::EndpointOutsideTube(0));
    }
    if end < lower[n - 1] - tol || end > upper[n - 1] + tol {
        return Err(Facet1dError::EndpointOutsideTube(n - 1));
    }

    type P = (usize, f64);
    let slope = |a: P, b: P| (b.1 - a.1) / (b.0 - a.0) as f64;
    let mut y = vec![0.0; n];
    y[0] = start;
    let emit = |y: &mut Vec<f64>, a: P, b: P| {
        let s = slope(a, b);
        for (k, v) in y.iter_mut().enumerate().take(b.0 + 1).skip(a.0 + 1) {
            *v = a.1 + s * (k - a.0) as f64;
        }
        y[b.0] = b.1;
    };
    let mut up: VecDeque<P> = VecDeque::from([(0, start)]);
    let mut dn: VecDeque<P> = VecDeque::from([(0, start)]);
    for k in 1..n {
        let (lo_k, hi_k) = if k == n - 1 { (end, end) } else { (lower[k], upper[k]) };
        let u = (k, hi_k);
        if dn.len() >= 2 && slope(dn[0], u) < slope(dn[0], dn[1]) {
            while dn.len() >= 2 && slope(dn[0], u) < slope(dn[0], dn[1]) {
                emit(&mut y, dn[0], dn[1]);
                dn.pop_front();
            }
            up.clear();
            up.push_back(dn[0]);
            up.push_back(u);
        } else {
            while up.len() >= 2 && slope(up[up.len() - 2], u) <= slope(up[up.len() - 2], up[up.len() - 1]) {
                up.pop_back();
            }
            up.push_back(u);
        }
        let l = (k, lo_k);
        if up.len() >= 2 && slope(up[0], l) > slope(up[0], up[1]) {
            while up.len() >= 2 && slope(up[0], l) > slope(up[0], up[1]) {
                emit(&mut y, up[0], up[1]);
                up.pop_front();
            }
            dn.clear();
            dn.push_back(up[0]);
            dn.push_back(l);
        } else {
            while dn.len() >= 2 && slope(dn[dn.len() - 2], l) >= slope(dn[dn.len() - 2], dn[dn.len() - 1]) {
                dn.pop_back();
            }
            dn.push_back(l);
        }
    }
    let apex = up[0];
    if apex.0 < n - 1 {
        emit(&mut y, apex, (n - 1, end));
    }

    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let lambda = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let knots = (1..n - 1)
        .filter(|&k| (y[k] - lower[k]).abs() <= tol || (upper[k] - y[k]).abs() <= tol)
        .collect();
    Ok(TautStringResult { x: x.to_vec(), lower: lower.to_vec(), upper: upper.to_vec(), y, lambda, knots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FacetRun {
    pub first_cell: usize,
    pub last_cell: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub lambda: f64,
}

/// Greedy maximal runs of cells whose `Λ` stays within `tol` of the run mean.
/// More than one run means the facet bends or splits instead of translating.
pub fn facet_partition(r: &TautStringResult, tol: f64) -> Vec<FacetRun> {
    let mut runs = Vec::new();
    let lam = &r.lambda;
    let mut s = 0;
    while s < lam.len() {
        let (mut sum, mut lo, mut hi) = (lam[s], lam[s], lam[s]);
        let mut e = s;
        while e + 1 < lam.len() {
            let v = lam[e + 1];
            let mean = (sum + v) / (e + 2 - s) as f64;
            let (nlo, nhi) = (lo.min(v), hi.max(v));
            if nhi - mean > tol || mean - nlo > tol {
                break;
            }
            sum += v;
            lo = nlo;
            hi = nhi;
            e += 1;
        }
        runs.push(FacetRun {
            first_cell: s,
            last_cell: e,
            x_lo: r.x[s],
            x_hi: r.x[e + 1],
            lambda: sum / (e + 1 - s) as f64,
        });
        s = e + 1;
    }
    runs
}

/// How the edges beyond the ends of a 1D profile are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRule {
    Periodic,
    /// Dual field fixed to `θ_left` before the first cell and `θ_right` after
    /// the last one.
    Fixed { theta_left: f64, theta_right: f64 },
}

/// Facet speed `Λ` of every cell of a 1D profile: edges with
/// `|u_{i+1} − u_i| ≤ flat_tol` are free, sloped edges carry the sign of their
/// slope, and each run of free edges is solved by a taut string.
pub fn profile_speed(u: &[f64], forcing: &[f64], h: f64, rule: EdgeRule, flat_tol: f64) -> Result<Vec<f64>> {
    let n = u.len();
    if n == 0 || forcing.len() != n {
        return Err(Facet1dError::NoCells);
    }
    // z[e] is the edge to the left of cell e; z[n] closes the profile
    let sign = |d: f64| if d > 0.0 { 1.0 } else { -1.0 };
    let periodic = matches!(rule, EdgeRule::Periodic);
    let edge_diff = |e: usize| -> Option<f64> {
        // difference across the edge left of cell e
        if e == 0 || e == n {
            if periodic {
                Some(u[0] - u[n - 1])
            } else {
                None
            }
        } else {
            Some(u[e] - u[e - 1])
        }
    };
    let fixed: Vec<Option<f64>> = (0..=n)
        .map(|e| match edge_diff(e) {
            Some(d) if d.abs() <= flat_tol => None,
            Some(d) => Some(sign(d)),
            None => match rule {
                EdgeRule::Fixed { theta_left, theta_right } => Some(if e == 0 { theta_left } else { theta_right }),
                EdgeRule::Periodic => unreachable!(),
            },
        })
        .collect();

    let mut lambda = vec![0.0; n];
    // walk runs of cells between consecutive fixed edges; in the periodic
    // case start right after some fixed edge and wrap around
    let start = if periodic {
        match (0..n).find(|&e| fixed[e].is_some()) {
            Some(e) => e,
            None => return Err(Facet1dError::NoFixedEdge),
        }
    } else {
        0
    };
    let mut s = start;
    let mut done = 0;
    while done < n {
        let mut len = 1;
        while len < n - done && fixed[(s + len) % n].is_none() {
            len += 1;
        }
        let theta_lo = fixed[s].expect("run starts at a fixed edge");
        let end_edge = s + len;
        let theta_hi = if periodic { fixed[end_edge % n] } else { fixed[end_edge] }.expect("run ends at a fixed edge");
        let cells: Vec<usize> = (0..len).map(|k| (s + k) % n).collect();
        let f_run: Vec<f64> = cells.iter().map(|&c| forcing[c]).collect();
        if len == 1 {
            lambda[cells[0]] = (theta_hi - theta_lo) / h - f_run[0];
        } else {
            let p = FacetProblem1D::new(0.0, len as f64 * h, theta_lo, theta_hi, f_run)?;
            let r = solve(&p)?;
            for (c, l) in cells.iter().zip(&r.lambda) {
                lambda[*c] = *l;
            }
        }
        done += len;
        s = (s + len) % n;
        if !periodic && s == 0 {
            break;
        }
    }
    Ok(lambda)
}

fn check_even_static(f: &Forcing) -> Result<f64> {
    if f.dim() != 1 || !f.is_static() {
        return Err(Facet1dError::NotOneDimensional);
    }
    let r = match f.support_1d() {
        Support::Interval(a, b) => a.abs().max(b.abs()),
        _ => return Err(Facet1dError::NoCompactSupport),
    };
    let tol = 1e-12 * f.sup_bound().max(1.0);
    for k in 1..=64 {
        let x = r * k as f64 / 64.0;
        if (f.at(x) - f.at(-x)).abs() > tol {
            return Err(Facet1dError::NotEven { x });
        }
    }
    Ok(r)
}

const ELL_PANELS: usize = 4096;

/// `h(ℓ) = f(ℓ) + 1/ℓ − (1/2ℓ)∫_{−ℓ}^{ℓ} f`; its root is where the chord
/// across `[−ℓ, ℓ]` touches the obstacles tangentially.
pub fn tangency_residual(f: &Forcing, ell: f64) -> f64 {
    f.at(ell) + 1.0 / ell - f.integrate_1d(-ell, ell, ELL_PANELS) / (2.0 * ell)
}

/// Half-length `ℓ` of the moving facet for `u₀ ≡ 0` under an even forcing
/// that is nonincreasing where positive, by bisection of
/// [`tangency_residual`] on `[δ, R − δ]`.
pub fn solve_ell(f: &Forcing) -> Result<f64> {
    let r = check_even_static(f)?;
    let mass = f.integrate_1d(-r, r, ELL_PANELS);
    if mass <= 2.0 {
        return Err(Facet1dError::NoInteriorTangency { mass });
    }
    let delta = r / ELL_PANELS as f64;
    let (mut a, mut b) = (delta, r - delta);
    if !(tangency_residual(f, a) > 0.0 && tangency_residual(f, b) < 0.0) {
        return Err(Facet1dError::Bracket { lo: a, hi: b });
    }
    while b - a > 1e-13 * r {
        let m = 0.5 * (a + b);
        if tangency_residual(f, m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `u(x, t) = max(−f(x)·t, −f(ℓ)·t)` for `u₀ ≡ 0`.
#[derive(Debug, Clone)]
pub struct ExplicitSolution {
    pub forcing: Forcing,
    pub ell: f64,
}

impl ExplicitSolution {
    pub fn new(f: &Forcing) -> Result<Self> {
        Ok(Self { forcing: f.clone(), ell: solve_ell(f)? })
    }

    pub fn facet_speed(&self) -> f64 {
        -self.forcing.at(self.ell)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (-self.forcing.at(x) * t).max(self.facet_speed() * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetOdeOptions {
    pub t_end: f64,
    pub dt: f64,
    pub emit_every: usize,
    pub theta_left: f64,
    pub theta_right: f64,
    /// Edges with `|Δu|` at or below this are treated as flat.
    pub flat_tol: f64,
    /// Collision substeps allowed within a single time step.
    pub max_substeps: usize,
}

impl Default for FacetOdeOptions {
    fn default() -> Self {
        Self {
            t_end: 0.1,
            dt: 1e-4,
            emit_every: 100,
            theta_left: -1.0,
            theta_right: 1.0,
            flat_tol: 1e-10,
            max_substeps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory1D {
    pub x: Vec<f64>,
    pub frames: Vec<(f64, Vec<f64>)>,
}

impl Trajectory1D {
    pub fn last(&self) -> &(f64, Vec<f64>) {
        self.frames.last().expect("trajectory has at least the initial frame")
    }
}

/// Forward-Euler crystalline flow `u_t = Λ` on a 1D box: each step recomputes
/// the facets of the current profile, solves their taut strings and moves
/// every cell by its speed. When two sloped regions would meet within a step
/// the step is split at the collision and the meeting edge becomes flat.
pub fn evolve_facet_ode(f: &Forcing, u0: &[f64], grid: &Grid, opts: &FacetOdeOptions) -> Result<Trajectory1D> {
    if grid.dim != 1 || f.dim() != 1 {
        return Err(Facet1dError::NotOneDimensional);
    }
    if !(opts.dt > 0.0 && opts.t_end >= 0.0 && opts.dt.is_finite() && opts.t_end.is_finite()) {
        return Err(Facet1dError::TimeStep { dt: opts.dt, t_end: opts.t_end });
    }
    let n = grid.n[0];
    if u0.len() != n {
        return Err(Facet1dError::NoCells);
    }
    let h = grid.h;
    let rule = EdgeRule::Fixed { theta_left: opts.theta_left, theta_right: opts.theta_right };
    let x: Vec<f64> = (0..n).map(|i| grid.center(i, 0)[0]).collect();
    let mut u = u0.to_vec();
    let mut frames = vec![(0.0, u.clone())];
    let steps = (opts.t_end / opts.dt).round() as usize;
    let emit_every = opts.emit_every.max(1);
    let mut forcing = f.cell_values(grid, 0.0);
    for step in 0..steps {
        let t = step as f64 * opts.dt;
        if !f.is_static() {
            forcing = f.cell_values(grid, t);
        }
        let mut remaining = opts.dt;
        let mut substeps = 0;
        while remaining > 0.0 {
            let lambda = profile_speed(&u, &forcing, h, rule, opts.flat_tol)?;
            let mut t_hit = f64::INFINITY;
            for e in 0..n - 1 {
                let d = u[e + 1] - u[e];
                let rate = lambda[e + 1] - lambda[e];
                if d.abs() > opts.flat_tol && d * rate < 0.0 {
                    t_hit = t_hit.min(d.abs() / rate.abs());
                }
            }
            let tau = if t_hit < remaining { t_hit } else { remaining };
            for (ui, li) in u.iter_mut().zip(&lambda) {
                *ui += tau * li;
            }
            if t_hit < remaining {
                substeps += 1;
                if substeps > opts.max_substeps {
                    return Err(Facet1dError::TopologyUnresolved { t: t + opts.dt - remaining });
                }
                // snap edges that just closed
                for e in 0..n - 1 {
                    let d = u[e + 1] - u[e];
                    let rate = lambda[e + 1] - lambda[e];
                    if d.abs() <= rate.abs() * t_hit * 1e-9 + opts.flat_tol {
                        u[e + 1] = u[e];
                    }
                }
            }
            remaining -= tau;
        }
        if let Some(cell) = u.iter().position(|v| !v.is_finite()) {
            return Err(Facet1dError::NonFinite { cell, t: t + opts.dt });
        }
        if (step + 1) % emit_every == 0 || step + 1 == steps {
            frames.push(((step + 1) as f64 * opts.dt, u.clone()));
        }
    }
    Ok(Trajectory1D { x, frames })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub nonnegative: bool,
    pub nonzero: bool,
    pub compact_support: bool,
    pub support_inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetStats {
    pub half_length: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceReport {
    pub hypotheses: Hypotheses,
    pub max_f: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub support: Option<(f64, f64)>,
    /// Facet `[−L, L]` of the barrier: `−Λ + max f ≤ 0` must hold on it.
    pub barrier: Option<FacetStats>,
    pub barrier_max_residual: Option<f64>,
    /// Longer test facet on `u ≡ 0`.
    pub test_facet: Option<FacetStats>,
    pub witness_x: Option<f64>,
    /// `−Λ + f` at the witness cell.
    pub witness_value: Option<f64>,
    pub verdict: String,
}

impl NonexistenceReport {
    pub fn issued(&self) -> bool {
        self.verdict == "certificate issued"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    pub cells: usize,
    /// Test facet half-length as a multiple of `L`.
    pub test_factor: f64,
    /// Required margin `−Λ + f ≥ margin` at the witness.
    pub margin: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { cells: 2000, test_factor: 1.25, margin: 1e-3 }
    }
}

/// Checks the hypotheses of the nonexistence argument for
/// `u_t − (sign u_x)_x + f(x) = 0`, `u(·, 0) = 0`, and when they hold issues
/// a certificate from two facet speed computations: the barrier facet
/// `[−L, L]`, `L = 1/max f`, where `−Λ + max f ≤ 0`, and a longer facet on
/// `u ≡ 0` with a cell where `−Λ + f > 0`. The forcing enters outside `Λ`
/// here, so both facet speeds are computed with zero forcing.
pub fn nonexistence_certificate(f: &Forcing, opts: &CertificateOptions) -> Result<NonexistenceReport> {
    if f.dim() != 1 || !f.is_static() {
        return Err(Facet1dError::NotOneDimensional);
    }
    let support = f.support_1d();
    let (span, compact) = match support {
        Support::Interval(a, b) => ((a, b), true),
        Support::Empty => ((-1.0, 1.0), true),
        Support::Unbounded => ((-1.0, 1.0), false),
    };
    let samples = 1 << 14;
    let xs: Vec<f64> = (0..=samples)
        .map(|k| span.0 + (span.1 - span.0) * k as f64 / samples as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f.at(x)).collect();
    let max_f = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nonnegative = compact && vals.iter().all(|&v| v >= 0.0);
    let nonzero = !matches!(support, Support::Empty) && max_f > 0.0;
    let l = if nonzero { Some(1.0 / max_f) } else { None };
    let support_inside = match (support, l) {
        (Support::Interval(a, b), Some(l)) => -l < a && b < l,
        _ => false,
    };
    let hypotheses = Hypotheses { nonnegative, nonzero, compact_support: compact, support_inside };
    let mut report = NonexistenceReport {
        hypotheses: hypotheses.clone(),
        max_f,
        l,
        support: match support {
            Support::Interval(a, b) => Some((a, b)),
            _ => None,
        },
        barrier: None,
        barrier_max_residual: None,
        test_facet: None,
        witness_x: None,
        witness_value: None,
        verdict: "hypotheses not met".into(),
    };
    if !(nonnegative && nonzero && compact && support_inside) {
        return Ok(report);
    }
    let l = l.expect("nonzero forcing has a finite L");
    let stats = |half: f64| -> Result<(FacetStats, TautStringResult)> {
        let p = FacetProblem1D::new(-half, half, -1.0, 1.0, vec![0.0; opts.cells])?;
        let r = solve(&p)?;
        let lo = r.lambda.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((FacetStats { half_length: half, lambda_min: lo, lambda_max: hi }, r))
    };
    let (barrier, _) = stats(l)?;
    let residual = -barrier.lambda_min + max_f;
    let (test, r) = stats(opts.test_factor * l)?;
    let (witness_x, witness_value) = r
        .cell_centers()
        .iter()
        .zip(&r.lambda)
        .map(|(&x, &lam)| (x, -lam + f.at(x)))
        .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    let ok = residual <= 1e-9 && witness_value >= opts.margin;
    report.barrier = Some(barrier);
    report.barrier_max_residual = Some(residual);
    report.test_facet = Some(test);
    report.witness_x = Some(witness_x);
    report.witness_value = Some(witness_value);
    report.verdict = if ok { "certificate issued" } else { "inconclusive" }.into();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_forcing_gives_unit_tube() {
        let p = FacetProblem1D::new(-1.0, 1.0, -1.0, 1.0, vec![0.0; 10]).unwrap();
        let o = obstacles(&p);
        assert!(o.lower.iter().all(|&v| v == -1.0));
        assert!(o.upper.iter().all(|&v| v == 1.0));
        let r = solve(&p).unwrap();
        assert!(r.lambda.iter().all(|l| (l - 1.0).abs() < 1e-14));
        assert_eq!(facet_partition(&r, 1e-9).len(), 1);
    }

    #[test]
    fn same_signs_give_zero_speed() {
        let p = FacetProblem1D::new(0.0, 1.0, 1.0, 1.0, vec![0.0; 7]).unwrap();
        let r = solve(&p).unwrap();
        assert!(r.lambda.iter().all(|l| l.abs() < 1e-14));
    }

    #[test]
    fn string_bends_around_obstacle() {
        // tube forces the path up through a gate at node 2
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let lo = [-10.0, -10.0, 3.0, -10.0, -10.0];
        let hi = [10.0, 10.0, 10.0, 10.0, 10.0];
        let r = taut_string(&x, &lo, &hi, 0.0, 0.0).unwrap();
        assert_eq!(r.y, vec![0.0, 1.5, 3.0, 1.5, 0.0]);
        assert_eq!(r.knots, vec![2]);
    }

    #[test]
    fn infeasible_tube_is_reported() {
        let x = [0.0, 1.0, 2.0];
        assert_eq!(
            taut_string(&x, &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], 0.0, 0.0).unwrap_err(),
            Facet1dError::EmptyTube(1)
        );
        assert_eq!(
            taut_string(&x, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 2.0, 0.0).unwrap_err(),
            Facet1dError::EndpointOutsideTube(0)
        );
    }

    #[test]
    fn tent_facet_length() {
        let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
        let ell = solve_ell(&f).unwrap();
        assert!((ell - (2.0f64 / 3.0).sqrt()).abs() < 1e-10);
        assert!(tangency_residual(&f, ell).abs() < 1e-10);
        let small = Forcing::tent_1d(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(solve_ell(&small), Err(Facet1dError::NoInteriorTangency { .. })));
        let odd = Forcing::tent_1d(3.0, 1.0, 0.2).unwrap();
        assert!(matches!(solve_ell(&odd), Err(Facet1dError::NotEven { .. })));
    }

    #[test]
    fn explicit_solution_values() {
        let s = ExplicitSolution::new(&Forcing::tent_1d(3.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.eval(0.3, 0.0), 0.0);
        assert_eq!(s.eval(0.1, 0.05), s.facet_speed() * 0.05);
        assert_eq!(s.eval(1.5, 0.05), 0.0);
        assert_eq!(s.eval(0.9, 0.1), -s.forcing.at(0.9) * 0.1);
    }

    #[test]
    fn periodic_profile_speed() {
        // valley of half-width 0.5 on a torus of length 4
        let g = Grid::line(400, -2.0, 2.0).unwrap();
        let u: Vec<f64> = (0..400).map(|i| (g.center(i, 0)[0].abs() - 0.5).max(0.0)).collect();
        let lam = profile_speed(&u, &vec![0.0; 400], g.h, EdgeRule::Periodic, 1e-12).unwrap();
        for i in 0..400 {
            if u[i] == 0.0 {
                assert!((lam[i] - 2.0).abs() < 1e-12, "{}", lam[i]);
            }
        }
        assert_eq!(
            profile_speed(&[1.0; 5], &[0.0; 5], 0.1, EdgeRule::Periodic, 1e-12).unwrap_err(),
            Facet1dError::NoFixedEdge
        );
    }

    #[test]
    fn certificate_cases() {
        let opts = CertificateOptions::default();
        let f = Forcing::tent_1d(0.9, 1.0, 0.0).unwrap();
        let r = nonexistence_certificate(&f, &opts).unwrap();
        assert!(r.issued(), "{r:?}");
        assert!((r.l.unwrap() - 1.0 / 0.9).abs() < 1e-12);
        assert!(r.barrier.as_ref().unwrap().lambda_min >= 0.9 - 1e-3);
        let big = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
        let r = nonexistence_certificate(&big, &opts).unwrap();
        assert!(!r.issued() && !r.hypotheses.support_inside);
        let r = nonexistence_certificate(&Forcing::zero(1), &opts).unwrap();
        assert!(!r.issued() && !r.hypotheses.nonzero);
    }
}

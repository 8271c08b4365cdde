//! Resolvents of anisotropic total variation plus forcing on periodic grids
//! and the minimal divergence `Λ_f[ψ] = lim_{a→0} (ψ_a − ψ)/a`.
//!
//! The discrete energy is `E_f(ζ) = Σ [σ(Dζ) + f ζ] hⁿ` with forward
//! differences `D` and `div = −Dᵀ`. The resolvent `ψ_a` minimizes
//! `‖ζ − ψ‖²/(2a) + E_f(ζ)`; its dual field `z ∈ W` gives
//! `ψ_a = ψ + a(div z − f)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anisotropy::{dot, Anisotropy, Vec2};
use crate::forcing::Forcing;
use crate::grid::{Boundary, Grid, GridError, ScalarField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProxError {
    #[error("resolvent needs a periodic field")]
    NotPeriodic,
    #[error("anisotropy dimension {aniso} does not match grid dimension {grid}")]
    Dimension { aniso: usize, grid: usize },
    #[error("forcing dimension {forcing} does not match grid dimension {grid}")]
    ForcingDimension { forcing: usize, grid: usize },
    #[error("step a must be positive, got {0}")]
    Step(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("empty facet: no cell with |psi| <= {threshold:e}")]
    EmptyFacet { threshold: f64 },
    #[error("step schedule needs at least three strictly decreasing positive values")]
    Schedule,
    #[error("facet speed not resolved: successive extrapolations differ by {diff:e} (> {limit:e})")]
    NotResolved { diff: f64, limit: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, ProxError>;

/// Iteration used for the resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Accelerated projected gradient on the dual problem
    /// `min_{z ∈ W} ‖div z − f + ψ/a‖²/2` with adaptive restart.
    #[default]
    Dual,
    /// Primal-dual (Chambolle–Pock) iteration on the saddle form.
    PrimalDual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub solver: Solver,
    /// Residual evaluation period.
    pub check_every: usize,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iters: 200_000, solver: Solver::Dual, check_every: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub psi_a: ScalarField,
    pub a: f64,
    /// Dual field per cell; the second component is zero in 1D.
    pub z: Vec<Vec2>,
    /// `div z − f`, the speed carried by the dual field.
    pub lambda: Vec<f64>,
    /// Optimality residual in speed units.
    pub residual: f64,
    pub iterations: usize,
    /// `(iteration, residual)` at every check.
    pub history: Vec<(usize, f64)>,
}

/// `Σ [σ(Dψ) + f ψ] hⁿ` with the per-cell forcing of [`Forcing::cell_values`].
pub fn energy(psi: &ScalarField, a: &Anisotropy, f: &Forcing) -> Result<f64> {
    check_inputs(psi, a, f)?;
    let fc = f.cell_values(&psi.grid, 0.0);
    let ops = Ops::new(&psi.grid);
    let mut grad = vec![[0.0; 2]; psi.values.len()];
    ops.grad(&psi.values, &mut grad);
    let s: f64 = grad
        .iter()
        .zip(&psi.values)
        .zip(&fc)
        .map(|((g, v), fk)| a.sigma(*g) + fk * v)
        .sum();
    Ok(s * psi.grid.cell_volume())
}

/// Nearest point of the Wulff shape: a clamp when it is a box, otherwise
/// Dykstra's alternating projections over the hull half-spaces.
pub fn project_wulff(a: &Anisotropy, v: &[f64]) -> Vec<f64> {
    let p = [v[0], if a.dim() == 2 { v[1] } else { 0.0 }];
    let q = if a.is_box() { clamp_box(a, p) } else { dykstra(a, p, 1e-12, 10_000) };
    q[..a.dim()].to_vec()
}

fn clamp_box(a: &Anisotropy, p: Vec2) -> Vec2 {
    let (lo, hi) = a.bounding_box();
    [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])]
}

fn dykstra(a: &Anisotropy, p: Vec2, tol: f64, max_sweeps: usize) -> Vec2 {
    let hs = a.halfspaces();
    if hs.iter().all(|h| dot(h.normal, p) <= h.offset) {
        return p;
    }
    let mut x = p;
    let mut inc = vec![[0.0; 2]; hs.len()];
    for _ in 0..max_sweeps {
        let start = x;
        for (h, c) in hs.iter().zip(inc.iter_mut()) {
            let y = [x[0] + c[0], x[1] + c[1]];
            let excess = dot(h.normal, y) - h.offset;
            let nx = if excess > 0.0 {
                let s = excess / dot(h.normal, h.normal);
                [y[0] - s * h.normal[0], y[1] - s * h.normal[1]]
            } else {
                y
            };
            *c = [y[0] - nx[0], y[1] - nx[1]];
            x = nx;
        }
        if (x[0] - start[0]).abs().max((x[1] - start[1]).abs()) <= tol {
            break;
        }
    }
    x
}

/// Exact nearest point of a convex polygon by comparing the projections
/// onto its edges. Used inside the solvers.
fn project_polygon(a: &Anisotropy, edges: &[(Vec2, Vec2)], p: Vec2) -> Vec2 {
    if a.halfspaces().iter().all(|h| dot(h.normal, p) <= h.offset) {
        return p;
    }
    let mut best = p;
    let mut best_d = f64::INFINITY;
    for &(s, e) in edges {
        let d = [e[0] - s[0], e[1] - s[1]];
        let t = (((p[0] - s[0]) * d[0] + (p[1] - s[1]) * d[1]) / dot(d, d)).clamp(0.0, 1.0);
        let q = [s[0] + t * d[0], s[1] + t * d[1]];
        let dist = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
        if dist < best_d {
            best_d = dist;
            best = q;
        }
    }
    best
}

/// Per-cell projection onto `W`, specialized once per solve.
struct Projector<'a> {
    aniso: &'a Anisotropy,
    boxed: Option<(Vec2, Vec2)>,
    edges: Vec<(Vec2, Vec2)>,
}

impl<'a> Projector<'a> {
    fn new(a: &'a Anisotropy) -> Self {
        let boxed = if a.is_box() { Some(a.bounding_box()) } else { None };
        let hull = a.hull_order();
        let edges = (0..hull.len())
            .map(|k| (a.vertices()[hull[k]], a.vertices()[hull[(k + 1) % hull.len()]]))
            .collect();
        Self { aniso: a, boxed, edges }
    }

    #[inline]
    fn project(&self, p: Vec2) -> Vec2 {
        match self.boxed {
            Some((lo, hi)) => [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])],
            None => project_polygon(self.aniso, &self.edges, p),
        }
    }
}

/// Forward differences and their negative adjoint on a periodic grid.
struct Ops {
    dim: usize,
    n0: usize,
    n1: usize,
    inv_h: f64,
}

impl Ops {
    fn new(g: &Grid) -> Self {
        Self { dim: g.dim, n0: g.n[0], n1: g.n[1], inv_h: 1.0 / g.h }
    }

    /// `‖D‖² ≤ 4n/h²`.
    fn norm_sq(&self) -> f64 {
        4.0 * self.dim as f64 * self.inv_h * self.inv_h
    }

    fn grad(&self, u: &[f64], out: &mut [Vec2]) {
        let (n0, n1) = (self.n0, self.n1);
        for j in 0..n1 {
            let jp = if j + 1 == n1 { 0 } else { j + 1 };
            for i in 0..n0 {
                let ip = if i + 1 == n0 { 0 } else { i + 1 };
                let k = j * n0 + i;
                let gx = (u[j * n0 + ip] - u[k]) * self.inv_h;
                let gy = if self.dim == 2 { (u[jp * n0 + i] - u[k]) * self.inv_h } else { 0.0 };
                out[k] = [gx, gy];
            }
        }
    }

    fn div(&self, z: &[Vec2], out: &mut [f64]) {
        let (n0, n1) = (self.n0, self.n1);
        for j in 0..n1 {
            let jm = if j == 0 { n1 - 1 } else { j - 1 };
            for i in 0..n0 {
                let im = if i == 0 { n0 - 1 } else { i - 1 };
                let k = j * n0 + i;
                let mut d = z[k][0] - z[j * n0 + im][0];
                if self.dim == 2 {
                    d += z[k][1] - z[jm * n0 + i][1];
                }
                out[k] = d * self.inv_h;
            }
        }
    }
}

fn check_inputs(psi: &ScalarField, a: &Anisotropy, f: &Forcing) -> Result<()> {
    if psi.boundary != Boundary::Periodic {
        return Err(ProxError::NotPeriodic);
    }
    if a.dim() != psi.grid.dim {
        return Err(ProxError::Dimension { aniso: a.dim(), grid: psi.grid.dim });
    }
    if f.dim() != psi.grid.dim {
        return Err(ProxError::ForcingDimension { forcing: f.dim(), grid: psi.grid.dim });
    }
    Ok(())
}

/// Solves `ψ_a + a∂E_f(ψ_a) ∋ ψ` with `f` frozen at `t = 0`.
pub fn resolvent(psi: &ScalarField, f: &Forcing, a: f64, aniso: &Anisotropy, opts: &ProxOptions) -> Result<ProxResult> {
    check_inputs(psi, aniso, f)?;
    let fc = f.cell_values(&psi.grid, 0.0);
    resolvent_cells(psi, &fc, a, aniso, opts)
}

/// [`resolvent`] with the per-cell forcing given directly.
pub fn resolvent_cells(psi: &ScalarField, fc: &[f64], a: f64, aniso: &Anisotropy, opts: &ProxOptions) -> Result<ProxResult> {
    if psi.boundary != Boundary::Periodic {
        return Err(ProxError::NotPeriodic);
    }
    if aniso.dim() != psi.grid.dim {
        return Err(ProxError::Dimension { aniso: aniso.dim(), grid: psi.grid.dim });
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(ProxError::Step(a));
    }
    match opts.solver {
        Solver::Dual => dual_solve(psi, fc, a, aniso, opts),
        Solver::PrimalDual => primal_dual_solve(psi, fc, a, aniso, opts),
    }
}

struct Workspace {
    ops: Ops,
    dpsi_over_a: Vec<Vec2>,
    lam: Vec<f64>,
    dlam: Vec<Vec2>,
}

impl Workspace {
    fn new(psi: &ScalarField, a: f64) -> Self {
        let ops = Ops::new(&psi.grid);
        let n = psi.values.len();
        let mut dpsi = vec![[0.0; 2]; n];
        ops.grad(&psi.values, &mut dpsi);
        for g in dpsi.iter_mut() {
            g[0] /= a;
            g[1] /= a;
        }
        Self { ops, dpsi_over_a: dpsi, lam: vec![0.0; n], dlam: vec![[0.0; 2]; n] }
    }

    /// `Λ = div z − f` and `Dζ/a = Dψ/a + DΛ` for `ζ = ψ + aΛ`.
    fn speed(&mut self, z: &[Vec2], fc: &[f64]) {
        self.ops.div(z, &mut self.lam);
        for (l, fk) in self.lam.iter_mut().zip(fc) {
            *l -= fk;
        }
        self.ops.grad(&self.lam, &mut self.dlam);
        for (d, g) in self.dlam.iter_mut().zip(&self.dpsi_over_a) {
            d[0] += g[0];
            d[1] += g[1];
        }
    }

    /// `L·‖z − Π_W(z + Dζ/(aL²))‖∞`; zero exactly at the optimum.
    fn fixed_point_residual(&mut self, z: &[Vec2], fc: &[f64], proj: &Projector) -> f64 {
        self.speed(z, fc);
        let l2 = self.ops.norm_sq();
        let mut r: f64 = 0.0;
        for (zk, d) in z.iter().zip(&self.dlam) {
            let q = proj.project([zk[0] + d[0] / l2, zk[1] + d[1] / l2]);
            r = r.max((q[0] - zk[0]).abs()).max((q[1] - zk[1]).abs());
        }
        r * l2.sqrt()
    }
}

fn initial_dual(psi: &ScalarField, proj: &Projector, ws: &Workspace) -> Vec<Vec2> {
    let _ = psi;
    // large steps along Dψ land on the face of W selected by the slope sign
    ws.dpsi_over_a
        .iter()
        .map(|g| {
            let s = 1e12 / (g[0].abs() + g[1].abs()).max(1e-300);
            if g[0] == 0.0 && g[1] == 0.0 {
                proj.project([0.0, 0.0])
            } else {
                proj.project([g[0] * s, g[1] * s])
            }
        })
        .collect()
}

fn finish(psi: &ScalarField, a: f64, z: Vec<Vec2>, lambda: Vec<f64>, residual: f64, iterations: usize, history: Vec<(usize, f64)>) -> Result<ProxResult> {
    let values = psi.values.iter().zip(&lambda).map(|(p, l)| p + a * l).collect();
    let psi_a = ScalarField::new(psi.grid, psi.boundary, values)?;
    Ok(ProxResult { psi_a, a, z, lambda, residual, iterations, history })
}

fn dual_solve(psi: &ScalarField, fc: &[f64], a: f64, aniso: &Anisotropy, opts: &ProxOptions) -> Result<ProxResult> {
    let proj = Projector::new(aniso);
    let mut ws = Workspace::new(psi, a);
    let l2 = ws.ops.norm_sq();
    let n = psi.values.len();
    let mut z = initial_dual(psi, &proj, &ws);
    let mut y = z.clone();
    let mut z_new = vec![[0.0; 2]; n];
    let mut t = 1.0f64;
    let mut history = Vec::new();
    let check = opts.check_every.max(1);
    for it in 0..opts.max_iters {
        if it % check == 0 {
            let residual = ws.fixed_point_residual(&z, fc, &proj);
            history.push((it, residual));
            if residual <= opts.tol {
                let lam = ws.lam.clone();
                return finish(psi, a, z, lam, residual, it, history);
            }
        }
        ws.speed(&y, fc);
        let mut restart_dot = 0.0;
        for k in 0..n {
            let d = ws.dlam[k];
            let q = proj.project([y[k][0] + d[0] / l2, y[k][1] + d[1] / l2]);
            restart_dot += (y[k][0] - q[0]) * (q[0] - z[k][0]) + (y[k][1] - q[1]) * (q[1] - z[k][1]);
            z_new[k] = q;
        }
        let t_next;
        let beta;
        if restart_dot > 0.0 {
            t_next = 1.0;
            beta = 0.0;
        } else {
            t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            beta = (t - 1.0) / t_next;
        }
        for k in 0..n {
            let q = z_new[k];
            y[k] = [q[0] + beta * (q[0] - z[k][0]), q[1] + beta * (q[1] - z[k][1])];
        }
        std::mem::swap(&mut z, &mut z_new);
        t = t_next;
    }
    let residual = ws.fixed_point_residual(&z, fc, &proj);
    history.push((opts.max_iters, residual));
    if residual <= opts.tol {
        let lam = ws.lam.clone();
        return finish(psi, a, z, lam, residual, opts.max_iters, history);
    }
    Err(ProxError::NoConvergence { iterations: opts.max_iters, residual })
}

fn primal_dual_solve(psi: &ScalarField, fc: &[f64], a: f64, aniso: &Anisotropy, opts: &ProxOptions) -> Result<ProxResult> {
    let proj = Projector::new(aniso);
    let mut ws = Workspace::new(psi, a);
    let n = psi.values.len();
    let l = ws.ops.norm_sq().sqrt();
    // τκ‖D‖² = 1
    let (tau, kappa) = (1.0 / l, 1.0 / l);
    let mut zeta = psi.values.clone();
    let mut zeta_bar = zeta.clone();
    let mut z = initial_dual(psi, &proj, &ws);
    let mut grad = vec![[0.0; 2]; n];
    let mut divz = vec![0.0; n];
    let mut history = Vec::new();
    let check = opts.check_every.max(1);
    let primal_gap = |zeta: &[f64], lam: &[f64]| {
        zeta.iter()
            .zip(&psi.values)
            .zip(lam)
            .map(|((zt, p), lm)| ((zt - p) / a - lm).abs())
            .fold(0.0, f64::max)
    };
    for it in 0..opts.max_iters {
        if it % check == 0 {
            let r = ws.fixed_point_residual(&z, fc, &proj);
            let residual = r.max(primal_gap(&zeta, &ws.lam));
            history.push((it, residual));
            if residual <= opts.tol {
                let lam = ws.lam.clone();
                return finish(psi, a, z, lam, residual, it, history);
            }
        }
        ws.ops.grad(&zeta_bar, &mut grad);
        for k in 0..n {
            z[k] = proj.project([z[k][0] + kappa * grad[k][0], z[k][1] + kappa * grad[k][1]]);
        }
        ws.ops.div(&z, &mut divz);
        let c = tau / a;
        for k in 0..n {
            let old = zeta[k];
            let v = zeta[k] + tau * divz[k];
            zeta[k] = (v - tau * fc[k] + c * psi.values[k]) / (1.0 + c);
            zeta_bar[k] = 2.0 * zeta[k] - old;
        }
    }
    let r = ws.fixed_point_residual(&z, fc, &proj);
    let residual = r.max(primal_gap(&zeta, &ws.lam));
    history.push((opts.max_iters, residual));
    Err(ProxError::NoConvergence { iterations: opts.max_iters, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalDivergenceOptions {
    /// Strictly decreasing step sizes.
    pub a_schedule: Vec<f64>,
    /// Cauchy tolerance on successive extrapolations (the check uses `10·tol`).
    pub tol: f64,
    /// Cells with `|ψ| ≤ facet_threshold` form the facet.
    pub facet_threshold: f64,
    pub prox: ProxOptions,
}

impl Default for MinimalDivergenceOptions {
    fn default() -> Self {
        Self {
            a_schedule: vec![1e-3, 1e-4, 1e-5],
            tol: 1e-7,
            facet_threshold: 1e-12,
            prox: ProxOptions::default(),
        }
    }
}

/// Band radii, in cells, for the essential infimum and supremum.
pub const BAND_RADII: [usize; 3] = [3, 2, 1];

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalDivergence {
    /// Facet cell indices.
    pub cells: Vec<usize>,
    /// Extrapolated `Λ` per facet cell.
    pub lambda: Vec<f64>,
    /// `(min, max)` of `Λ` over facet cells within each of [`BAND_RADII`].
    pub bands: [Vec<(f64, f64)>; 3],
    /// `(a, (ψ_a − ψ)/a on facet cells)` for each step.
    pub per_step: Vec<(f64, Vec<f64>)>,
    /// Successive Richardson estimates.
    pub estimates: Vec<Vec<f64>>,
    pub results: Vec<ProxResult>,
}

impl MinimalDivergence {
    /// Band at radius one cell.
    pub fn band(&self) -> &[(f64, f64)] {
        &self.bands[2]
    }
}

/// Minimal divergence on `{|ψ| ≤ facet_threshold}`: resolvents along the step
/// schedule, first-order Richardson elimination of consecutive pairs, and a
/// Cauchy check on the last two estimates.
pub fn minimal_divergence(psi: &ScalarField, f: &Forcing, aniso: &Anisotropy, opts: &MinimalDivergenceOptions) -> Result<MinimalDivergence> {
    check_inputs(psi, aniso, f)?;
    let fc = f.cell_values(&psi.grid, 0.0);
    minimal_divergence_cells(psi, &fc, aniso, opts)
}

pub fn minimal_divergence_cells(psi: &ScalarField, fc: &[f64], aniso: &Anisotropy, opts: &MinimalDivergenceOptions) -> Result<MinimalDivergence> {
    let s = &opts.a_schedule;
    if s.len() < 3 || s.iter().any(|a| !(*a > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ProxError::Schedule);
    }
    let cells: Vec<usize> = (0..psi.values.len())
        .filter(|&k| psi.values[k].abs() <= opts.facet_threshold)
        .collect();
    if cells.is_empty() {
        return Err(ProxError::EmptyFacet { threshold: opts.facet_threshold });
    }
    let mut per_step = Vec::with_capacity(s.len());
    let mut results = Vec::with_capacity(s.len());
    for &a in s {
        let r = resolvent_cells(psi, fc, a, aniso, &opts.prox)?;
        // (ψ_a − ψ)/a is carried exactly by the dual speed, without the 1/a
        // amplification of rounding in ψ_a
        per_step.push((a, cells.iter().map(|&k| r.lambda[k]).collect::<Vec<f64>>()));
        results.push(r);
    }
    let estimates: Vec<Vec<f64>> = per_step
        .windows(2)
        .map(|w| {
            let (a0, l0) = (&w[0].0, &w[0].1);
            let (a1, l1) = (&w[1].0, &w[1].1);
            l0.iter().zip(l1).map(|(x0, x1)| (a0 * x1 - a1 * x0) / (a0 - a1)).collect()
        })
        .collect();
    let last = &estimates[estimates.len() - 1];
    let prev = &estimates[estimates.len() - 2];
    let diff = last.iter().zip(prev).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let limit = 10.0 * opts.tol;
    if diff > limit {
        return Err(ProxError::NotResolved { diff, limit });
    }
    let lambda = last.clone();
    let bands = BAND_RADII.map(|r| band(&psi.grid, &cells, &lambda, r));
    Ok(MinimalDivergence { cells, lambda, bands, per_step, estimates, results })
}

fn band(grid: &Grid, cells: &[usize], lambda: &[f64], radius: usize) -> Vec<(f64, f64)> {
    let mut at = vec![None; grid.len()];
    for (pos, &k) in cells.iter().enumerate() {
        at[k] = Some(lambda[pos]);
    }
    let r = radius as isize;
    let (n0, n1) = (grid.n[0] as isize, grid.n[1] as isize);
    let rj = if grid.dim == 2 { r } else { 0 };
    cells
        .iter()
        .map(|&k| {
            let (i, j) = grid.coords(k);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for dj in -rj..=rj {
                for di in -r..=r {
                    if di * di + dj * dj > r * r {
                        continue;
                    }
                    let ii = (i as isize + di).rem_euclid(n0) as usize;
                    let jj = (j as isize + dj).rem_euclid(n1) as usize;
                    if let Some(v) = at[grid.index(ii, jj)] {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
            }
            (lo, hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(n: usize, len: f64) -> Grid {
        Grid::line(n, -len / 2.0, len / 2.0).unwrap()
    }

    #[test]
    fn projections() {
        let sq = Anisotropy::square();
        assert_eq!(project_wulff(&sq, &[3.0, -0.5]), vec![1.0, -0.5]);
        assert_eq!(project_wulff(&sq, &[0.2, -0.5]), vec![0.2, -0.5]);
        let di = Anisotropy::diamond();
        let p = project_wulff(&di, &[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert_eq!(project_wulff(&di, &[0.1, 0.2]), vec![0.1, 0.2]);
    }

    #[test]
    fn sawtooth_total_variation() {
        let g = torus(100, 1.0);
        // rise of 1 − h across the cells, then a jump back down
        let psi = ScalarField::from_fn(g, Boundary::Periodic, |x| x[0] + 0.5).unwrap();
        let e = energy(&psi, &Anisotropy::interval(-1.0, 1.0).unwrap(), &Forcing::zero(1)).unwrap();
        assert!((e - 2.0 * (1.0 - g.h)).abs() < 1e-12, "{e}");
    }

    #[test]
    fn zero_is_stationary() {
        let g = torus(32, 1.0);
        let psi = ScalarField::constant(g, Boundary::Periodic, 0.0).unwrap();
        let r = resolvent(&psi, &Forcing::zero(1), 0.1, &Anisotropy::interval(-1.0, 1.0).unwrap(), &ProxOptions::default()).unwrap();
        assert!(r.psi_a.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn valley_facet_speed() {
        let g = torus(400, 4.0);
        let psi = ScalarField::from_fn(g, Boundary::Periodic, |x| (x[0].abs() - 0.5).max(0.0)).unwrap();
        let a = Anisotropy::interval(-1.0, 1.0).unwrap();
        let md = minimal_divergence(&psi, &Forcing::zero(1), &a, &MinimalDivergenceOptions::default()).unwrap();
        assert_eq!(md.cells.len(), 100);
        for l in &md.lambda {
            assert!((l - 2.0).abs() < 1e-6, "{l}");
        }
    }

    #[test]
    fn primal_dual_agrees_with_dual() {
        let g = torus(32, 2.0);
        let psi = ScalarField::from_fn(g, Boundary::Periodic, |x| (x[0] * 3.0).sin()).unwrap();
        let a = Anisotropy::interval(-1.0, 1.0).unwrap();
        let f = Forcing::tent_1d(2.0, 0.5, 0.1).unwrap();
        let opts = ProxOptions { tol: 1e-8, ..Default::default() };
        let r1 = resolvent(&psi, &f, 0.05, &a, &opts).unwrap();
        let r2 = resolvent(&psi, &f, 0.05, &a, &ProxOptions { solver: Solver::PrimalDual, ..opts }).unwrap();
        assert!(r1.psi_a.max_abs_diff(&r2.psi_a) < 1e-7, "{}", r1.psi_a.max_abs_diff(&r2.psi_a));
    }
}

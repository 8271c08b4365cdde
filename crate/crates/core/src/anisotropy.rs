//! Crystalline anisotropies stored as the vertex list of their Wulff shape.
//!
//! `σ(p) = max_k ⟨w_k, p⟩` where `w_k` are the Wulff vertices. The Wulff
//! shape `W = conv{w_k} = ∂σ(0)` doubles as the Cahn–Hoffman constraint set
//! used by the resolvent solver, and its gauge is the polar function `σ°`.
//! Points are stored as `[f64; 2]`; one-dimensional anisotropies only use
//! the first coordinate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

const GEOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnisotropyError {
    #[error("unsupported dimension {0}: only 1 and 2 are supported")]
    Dimension(usize),
    #[error("vertex {index} has {got} coordinates, expected {dim}")]
    VertexArity { index: usize, got: usize, dim: usize },
    #[error("need at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("vertex {0} is not in convex position")]
    NotConvexPosition(usize),
    #[error("degenerate hull: the Wulff shape has empty interior")]
    DegenerateHull,
    #[error("origin is not strictly inside the Wulff shape")]
    OriginNotInterior,
    #[error("zero-dimensional face: the subdifferential at this gradient is a single vertex")]
    ZeroDimensionalFace,
    #[error("mode B regularization requires a centrally symmetric Wulff shape")]
    AsymmetricModeB,
    #[error("smoothing parameter m must be a positive integer")]
    BadSmoothing,
    #[error("point has {got} coordinates, expected {dim}")]
    PointArity { got: usize, dim: usize },
}

pub type Result<T> = std::result::Result<T, AnisotropyError>;

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn to_vec2(p: &[f64], dim: usize) -> Result<Vec2> {
    if p.len() != dim {
        return Err(AnisotropyError::PointArity { got: p.len(), dim });
    }
    Ok(if dim == 1 { [p[0], 0.0] } else { [p[0], p[1]] })
}

/// Supporting half-space `⟨normal, y⟩ ≤ offset` of the Wulff shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec2,
    pub offset: f64,
}

/// A crystalline anisotropy `σ(p) = max_k ⟨w_k, p⟩` on `R^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy {
    dim: usize,
    vertices: Vec<Vec2>,
    symmetric: bool,
    /// Half-spaces of the hull in counterclockwise edge order (2D) or the two
    /// endpoint constraints (1D).
    halfspaces: Vec<HalfSpace>,
    /// Hull vertex indices in counterclockwise order (2D) or ascending (1D).
    hull: Vec<usize>,
    origin_interior: bool,
}

/// Named Wulff shapes accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Vertices `(±1, ±1)`, so `σ(p) = |p₁| + |p₂|`.
    Square,
    /// Vertices `(±1, 0), (0, ±1)`, so `σ(p) = max(|p₁|, |p₂|)`.
    Diamond,
    /// One-dimensional `{−1, +1}`, so `σ(p) = |p|`.
    Interval,
}

impl Preset {
    pub fn build(self) -> Anisotropy {
        let a = match self {
            Preset::Square => {
                Anisotropy::planar(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
            }
            Preset::Diamond => {
                Anisotropy::planar(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
            }
            Preset::Interval => Anisotropy::interval(-1.0, 1.0),
        };
        a.expect("preset Wulff shapes are valid")
    }
}

impl Anisotropy {
    pub fn square() -> Self {
        Preset::Square.build()
    }

    pub fn diamond() -> Self {
        Preset::Diamond.build()
    }

    /// `σ(p) = max(lo·p, hi·p)` on the line; requires `lo < 0 < hi`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(1, &[vec![lo], vec![hi]])
    }

    pub fn planar(vertices: &[Vec2]) -> Result<Self> {
        let v: Vec<Vec<f64>> = vertices.iter().map(|w| w.to_vec()).collect();
        Self::new(2, &v)
    }

    /// Validates and builds an anisotropy from Wulff vertices in `R^dim`.
    ///
    /// The vertices must be in convex position and the origin must lie
    /// strictly inside their hull, which is what makes `σ(p) > 0` for `p ≠ 0`.
    pub fn new(dim: usize, vertices: &[Vec<f64>]) -> Result<Self> {
        let a = Self::build(dim, vertices)?;
        if !a.origin_interior {
            return Err(AnisotropyError::OriginNotInterior);
        }
        Ok(a)
    }

    /// Same validation as [`Anisotropy::new`] except that the origin may lie
    /// outside the hull. Sliced anisotropies are of this kind in general.
    fn build(dim: usize, vertices: &[Vec<f64>]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(AnisotropyError::Dimension(dim));
        }
        let min = dim + 1;
        if vertices.len() < min {
            return Err(AnisotropyError::TooFewVertices { min, got: vertices.len() });
        }
        let mut pts = Vec::with_capacity(vertices.len());
        for (index, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(AnisotropyError::VertexArity { index, got: v.len(), dim });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(AnisotropyError::NonFinite(index));
            }
            pts.push(if dim == 1 { [v[0], 0.0] } else { [v[0], v[1]] });
        }
        let scale = pts.iter().map(|&w| norm(w)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let (hull, halfspaces) = if dim == 1 {
            hull_1d(&pts, scale)?
        } else {
            hull_2d(&pts, scale)?
        };
        let origin_interior = halfspaces.iter().all(|hs| hs.offset > GEOM_EPS * scale * norm(hs.normal));
        let symmetric = pts
            .iter()
            .all(|w| pts.iter().any(|v| norm([v[0] + w[0], v[1] + w[1]]) <= 1e-12 * scale));
        Ok(Self { dim, vertices: pts, symmetric, halfspaces, hull, origin_interior })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Vertex coordinates truncated to the ambient dimension.
    pub fn vertex_coords(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|w| w[..self.dim].to_vec()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    /// Hull vertex indices in counterclockwise order.
    pub fn hull_order(&self) -> &[usize] {
        &self.hull
    }

    /// True when the Wulff shape is an axis-aligned box, where the nearest
    /// point projection is a componentwise clamp.
    pub fn is_box(&self) -> bool {
        self.dim == 1
            || (self.halfspaces.len() == 4
                && self
                    .halfspaces
                    .iter()
                    .all(|hs| hs.normal[0].abs() < GEOM_EPS * norm(hs.normal) || hs.normal[1].abs() < GEOM_EPS * norm(hs.normal)))
    }

    /// Componentwise bounds of the Wulff shape.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for w in &self.vertices {
            for c in 0..2 {
                lo[c] = lo[c].min(w[c]);
                hi[c] = hi[c].max(w[c]);
            }
        }
        (lo, hi)
    }

    pub fn eval_sigma(&self, p: &[f64]) -> Result<f64> {
        Ok(self.sigma(to_vec2(p, self.dim)?))
    }

    #[inline]
    pub fn sigma(&self, p: Vec2) -> f64 {
        self.vertices.iter().map(|&w| dot(w, p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Gauge of the Wulff shape, `σ°(x) = min{t > 0 : x ∈ tW}`.
    pub fn eval_polar(&self, x: &[f64]) -> Result<f64> {
        let x = to_vec2(x, self.dim)?;
        self.polar(x)
    }

    pub(crate) fn polar(&self, x: Vec2) -> Result<f64> {
        if !self.origin_interior {
            return Err(AnisotropyError::DegenerateHull);
        }
        Ok(self.polar_unchecked(x))
    }

    #[inline]
    pub(crate) fn polar_unchecked(&self, x: Vec2) -> f64 {
        self.halfspaces
            .iter()
            .map(|hs| dot(hs.normal, x) / hs.offset)
            .fold(0.0, f64::max)
    }

    /// `∂σ(p̂)`: the face of the Wulff shape maximizing `⟨·, p̂⟩`.
    ///
    /// `tol` defaults to `1e-10·max_k |⟨w_k, p̂⟩|`.
    pub fn subdifferential_face(&self, p_hat: &[f64], tol: Option<f64>) -> Result<SubdifferentialFace> {
        let p = to_vec2(p_hat, self.dim)?;
        let vals: Vec<f64> = self.vertices.iter().map(|&w| dot(w, p)).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = tol.unwrap_or(1e-10 * scale);
        let active: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] >= top - tol).collect();
        let pts: Vec<Vec2> = active.iter().map(|&k| self.vertices[k]).collect();
        let (k, tangent) = affine_basis(&pts, self.dim);
        let normal = complement_basis(&tangent, self.dim);
        let sliced_vertices = pts
            .iter()
            .map(|&w| tangent.iter().map(|&t| dot(t, w)).collect())
            .collect();
        Ok(SubdifferentialFace {
            base_gradient: p,
            active_vertices: active,
            dim: k,
            tangent,
            normal,
            sliced_vertices,
        })
    }

    /// The sliced anisotropy `σ^sl_{p̂}` on `R^k`, `k = dim ∂σ(p̂)`.
    pub fn slice(&self, p_hat: &[f64]) -> Result<Anisotropy> {
        let face = self.subdifferential_face(p_hat, None)?;
        if face.dim == 0 {
            return Err(AnisotropyError::ZeroDimensionalFace);
        }
        Anisotropy::build(face.dim, &face.sliced_vertices)
    }

    /// The two candidate expressions for `∇σ(∇σ°(x))` at `x ≠ 0`:
    /// the Euclidean direction `x/|x|` and the gauge-normalized `x/σ°(x)`.
    pub fn gauge_identity_candidates(&self, x: &[f64]) -> Result<GaugeCandidates> {
        let x = to_vec2(x, self.dim)?;
        let r = norm(x);
        let g = self.polar(x)?;
        let n = self.dim as f64;
        Ok(GaugeCandidates {
            euclidean: [x[0] / r, x[1] / r],
            gauge: [x[0] / g, x[1] / g],
            div_euclidean: (n - 1.0) / r,
            div_gauge: (n - 1.0) / g,
        })
    }

    /// Radius of the largest origin-centered ball inside the Wulff shape;
    /// `σ(p) ≥ inradius·|p|`.
    pub fn inradius(&self) -> f64 {
        self.halfspaces
            .iter()
            .map(|hs| hs.offset / norm(hs.normal))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest vertex norm; `σ(p) ≤ circumradius·|p|`.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|&w| norm(w)).fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max(norm(sub(*a, *b)));
            }
        }
        d
    }

    pub fn regularize(&self, mode: RegularizationMode, m: u32) -> Result<RegularizedAnisotropy> {
        RegularizedAnisotropy::new(self, mode, m)
    }
}

fn hull_1d(pts: &[Vec2], scale: f64) -> Result<(Vec<usize>, Vec<HalfSpace>)> {
    if pts.len() != 2 {
        // a third point on the line is always inside the segment of the others
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in pts.iter().enumerate() {
            if p[0] < pts[lo][0] {
                lo = i;
            }
            if p[0] > pts[hi][0] {
                hi = i;
            }
        }
        let bad = (0..pts.len()).find(|&i| i != lo && i != hi).unwrap_or(0);
        return Err(AnisotropyError::NotConvexPosition(bad));
    }
    let (lo, hi) = if pts[0][0] < pts[1][0] { (0, 1) } else { (1, 0) };
    if pts[hi][0] - pts[lo][0] <= GEOM_EPS * scale {
        return Err(AnisotropyError::DegenerateHull);
    }
    let hs = vec![
        HalfSpace { normal: [-1.0, 0.0], offset: -pts[lo][0] },
        HalfSpace { normal: [1.0, 0.0], offset: pts[hi][0] },
    ];
    Ok((vec![lo, hi], hs))
}

/// Counterclockwise strict convex hull (Andrew's monotone chain) plus the
/// outward edge half-spaces.
fn hull_2d(pts: &[Vec2], scale: f64) -> Result<(Vec<usize>, Vec<HalfSpace>)> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a][0]
            .partial_cmp(&pts[b][0])
            .unwrap()
            .then(pts[a][1].partial_cmp(&pts[b][1]).unwrap())
    });
    let tol = GEOM_EPS * scale * scale;
    let turn = |o: usize, a: usize, b: usize| cross(sub(pts[a], pts[o]), sub(pts[b], pts[o]));
    let mut hull: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for &i in &idx {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= tol {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= tol {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(AnisotropyError::DegenerateHull);
    }
    if hull.len() < pts.len() {
        let bad = (0..pts.len()).find(|i| !hull.contains(i)).unwrap_or(0);
        return Err(AnisotropyError::NotConvexPosition(bad));
    }
    let hs = (0..hull.len())
        .map(|e| {
            let a = pts[hull[e]];
            let b = pts[hull[(e + 1) % hull.len()]];
            let d = sub(b, a);
            let normal = [d[1], -d[0]];
            HalfSpace { normal, offset: dot(normal, a) }
        })
        .collect();
    Ok((hull, hs))
}

/// Orthonormal basis of the direction space of `aff(pts)`.
fn affine_basis(pts: &[Vec2], dim: usize) -> (usize, Vec<Vec2>) {
    let base = pts[0];
    let spread = pts.iter().map(|&p| norm(sub(p, base))).fold(0.0, f64::max);
    if spread <= GEOM_EPS * (1.0 + norm(base)) {
        return (0, Vec::new());
    }
    if dim == 1 {
        return (1, vec![[1.0, 0.0]]);
    }
    let far = *pts
        .iter()
        .max_by(|a, b| norm(sub(**a, base)).partial_cmp(&norm(sub(**b, base))).unwrap())
        .unwrap();
    let d = sub(far, base);
    let len = norm(d);
    let mut t = [d[0] / len, d[1] / len];
    // orientation convention: first nonzero coordinate positive
    if t[0] < -GEOM_EPS || (t[0].abs() <= GEOM_EPS && t[1] < 0.0) {
        t = [-t[0], -t[1]];
    }
    let off_line = pts
        .iter()
        .map(|&p| cross(t, sub(p, base)).abs())
        .fold(0.0, f64::max);
    if off_line <= GEOM_EPS * spread.max(1.0) {
        (1, vec![t])
    } else {
        (2, vec![[1.0, 0.0], [0.0, 1.0]])
    }
}

fn complement_basis(tangent: &[Vec2], dim: usize) -> Vec<Vec2> {
    match (dim, tangent.len()) {
        (1, 0) => vec![[1.0, 0.0]],
        (2, 0) => vec![[1.0, 0.0], [0.0, 1.0]],
        (2, 1) => vec![[tangent[0][1], -tangent[0][0]]],
        _ => Vec::new(),
    }
}

/// The face `∂σ(p̂)` together with the orthogonal splitting `R^n = Z ⊕ Z^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdifferentialFace {
    pub base_gradient: Vec2,
    /// Indices into [`Anisotropy::vertices`] attaining the maximum.
    pub active_vertices: Vec<usize>,
    /// Affine dimension `k` of the active vertex set.
    pub dim: usize,
    /// Orthonormal basis of `Z`, the direction space of `aff ∂σ(p̂)`.
    pub tangent: Vec<Vec2>,
    /// Orthonormal basis of `Z^⊥`.
    pub normal: Vec<Vec2>,
    /// Projections `T*w_j` of the active vertices, in `R^k`.
    pub sliced_vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeCandidates {
    pub euclidean: Vec2,
    pub gauge: Vec2,
    pub div_euclidean: f64,
    pub div_gauge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularizationMode {
    /// Smooth with quadratic growth: `ε log Σ exp(⟨w_k,p⟩/ε) + ε|p|²/2`, `ε = 1/m`.
    A,
    /// One-homogeneous: `(Σ |⟨w_k,p⟩|^{2m} + μ_m |p|^{2m})^{1/(2m)}`, `μ_m = m^{−m}`.
    B,
}

/// A smooth approximation `σ_m` of a crystalline anisotropy.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedAnisotropy {
    dim: usize,
    vertices: Vec<Vec2>,
    mode: RegularizationMode,
    m: u32,
    eps: f64,
    log_mu: f64,
    /// Mode A: `a_m` with `a_m^{-1} ≤ ∇²σ_m ≤ a_m`.
    ellipticity: Option<f64>,
    /// Mode B: `(λ_−, λ_+)` with `λ_−|p| ≤ σ_m(p) ≤ λ_+|p|`.
    gauge_bounds: Option<(f64, f64)>,
    /// Lower corner and side lengths when the Wulff shape is an axis-aligned
    /// box; the softmax then factorizes over the axes.
    box_span: Option<(Vec2, Vec2)>,
}

impl RegularizedAnisotropy {
    pub fn new(base: &Anisotropy, mode: RegularizationMode, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(AnisotropyError::BadSmoothing);
        }
        let mf = f64::from(m);
        let eps = 1.0 / mf;
        let log_mu = -mf * mf.ln();
        let (ellipticity, gauge_bounds) = match mode {
            RegularizationMode::A => {
                // λ_max(Cov_π w) ≤ (diam/2)² for any weights π on the vertices
                let d = base.diameter();
                (Some((d * d / 4.0 / eps + eps).max(1.0 / eps)), None)
            }
            RegularizationMode::B => {
                if !base.is_symmetric() {
                    return Err(AnisotropyError::AsymmetricModeB);
                }
                let k = base.vertices.len() as f64;
                let r = base.circumradius();
                let log_upper = log_sum_exp(&[k.ln() + 2.0 * mf * r.ln(), log_mu]);
                (None, Some((base.inradius(), (log_upper / (2.0 * mf)).exp())))
            }
        };
        let box_span = base.is_box().then(|| {
            let (lo, hi) = base.bounding_box();
            let lo = [lo[0], if base.dim == 1 { 0.0 } else { lo[1] }];
            (lo, [hi[0] - lo[0], if base.dim == 1 { 0.0 } else { hi[1] - lo[1] }])
        });
        Ok(Self { dim: base.dim, vertices: base.vertices.clone(), mode, m, eps, log_mu, ellipticity, gauge_bounds, box_span })
    }

    pub fn mode(&self) -> RegularizationMode {
        self.mode
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Width of the Wulff shape along coordinate `axis`, which bounds the
    /// oscillation of that component of `∇σ_m − εp`.
    pub fn extent(&self, axis: usize) -> f64 {
        let (lo, hi) = self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w[axis]), hi.max(w[axis])));
        hi - lo
    }

    /// `a_m` for mode A.
    pub fn ellipticity(&self) -> Option<f64> {
        self.ellipticity
    }

    /// `(λ_−, λ_+)` for mode B.
    pub fn gauge_bounds(&self) -> Option<(f64, f64)> {
        self.gauge_bounds
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        Ok(self.value(to_vec2(p, self.dim)?))
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let g = self.grad(to_vec2(p, self.dim)?);
        Ok(g[..self.dim].to_vec())
    }

    pub fn hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let h = self.hess(to_vec2(p, self.dim)?);
        Ok((0..self.dim).map(|i| h[i][..self.dim].to_vec()).collect())
    }

    pub fn value(&self, p: Vec2) -> f64 {
        match self.mode {
            RegularizationMode::A => {
                let (lse, _) = self.softmax(p);
                self.eps * lse + 0.5 * self.eps * dot(p, p)
            }
            RegularizationMode::B => match self.power_weights(p) {
                Some(pw) => pw.sigma,
                None => 0.0,
            },
        }
    }

    pub fn grad(&self, p: Vec2) -> Vec2 {
        match self.mode {
            RegularizationMode::A => {
                let (_, w) = self.softmax(p);
                let mut g = [self.eps * p[0], self.eps * p[1]];
                for (pi, v) in w.iter().zip(&self.vertices) {
                    g[0] += pi * v[0];
                    g[1] += pi * v[1];
                }
                self.mask(g)
            }
            RegularizationMode::B => match self.power_weights(p) {
                Some(pw) => {
                    let g = pw.log_gradient(p, &self.vertices);
                    self.mask([pw.sigma * g[0], pw.sigma * g[1]])
                }
                None => [0.0; 2],
            },
        }
    }

    pub fn hess(&self, p: Vec2) -> Mat2 {
        match self.mode {
            RegularizationMode::A => self.hess_a(p),
            RegularizationMode::B => self.hess_b(p),
        }
    }

    /// Mode A Hessian `ε^{-1} Cov_π(w) + εI` with `π = softmax(⟨w,p⟩/ε)`.
    #[inline]
    pub fn hess_a(&self, p: Vec2) -> Mat2 {
        let inv = 1.0 / self.eps;
        if let Some((lo, d)) = self.box_span {
            let (_, h) = self.box_grad_hess(lo, d, p);
            return h;
        }
        let mut top = f64::NEG_INFINITY;
        for w in &self.vertices {
            top = top.max(dot(*w, p) * inv);
        }
        let (mut z, mut m0, mut m1, mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for w in &self.vertices {
            let e = (dot(*w, p) * inv - top).exp();
            z += e;
            m0 += e * w[0];
            m1 += e * w[1];
            s00 += e * w[0] * w[0];
            s01 += e * w[0] * w[1];
            s11 += e * w[1] * w[1];
        }
        let (m0, m1) = (m0 / z, m1 / z);
        let c00 = s00 / z - m0 * m0;
        let c01 = s01 / z - m0 * m1;
        let c11 = s11 / z - m1 * m1;
        let h = [[inv * c00 + self.eps, inv * c01], [inv * c01, inv * c11 + self.eps]];
        self.mask_mat(h)
    }

    /// Mode A gradient and Hessian together.
    #[inline]
    pub fn grad_hess_a(&self, p: Vec2) -> (Vec2, Mat2) {
        if let Some((lo, d)) = self.box_span {
            return self.box_grad_hess(lo, d, p);
        }
        let (_, w) = self.softmax(p);
        let mut g = [self.eps * p[0], self.eps * p[1]];
        for (pi, v) in w.iter().zip(&self.vertices) {
            g[0] += pi * v[0];
            g[1] += pi * v[1];
        }
        (self.mask(g), self.hess_a(p))
    }

    /// `(∂_k σ_m, ∂_kk σ_m, |∂_kl σ_m|)` for mode A, `l ≠ k`.
    #[inline]
    pub fn axis_flux_a(&self, p: Vec2, k: usize) -> (f64, f64, f64) {
        if let Some((lo, d)) = self.box_span {
            let (g, h) = box_axis(self.eps, lo[k], d[k], p[k]);
            return (g, h, 0.0);
        }
        let (g, h) = self.grad_hess_a(p);
        (g[k], h[k][k], h[0][1].abs())
    }

    /// Per axis the weights sit on two values `lo` and `lo + d` with odds
    /// `exp(d·p/ε)`, so the mean is `lo + d·s` and the variance `d²·s(1 − s)`.
    #[inline]
    fn box_grad_hess(&self, lo: Vec2, d: Vec2, p: Vec2) -> (Vec2, Mat2) {
        let (g0, h0) = box_axis(self.eps, lo[0], d[0], p[0]);
        let (g1, h1) = box_axis(self.eps, lo[1], d[1], p[1]);
        (self.mask([g0, g1]), self.mask_mat([[h0, 0.0], [0.0, h1]]))
    }

    fn hess_b(&self, p: Vec2) -> Mat2 {
        let Some(pw) = self.power_weights(p) else {
            return [[0.0; 2]; 2];
        };
        let two_m = 2.0 * f64::from(self.m);
        let g = pw.log_gradient(p, &self.vertices);
        // (1/2m) ∇²S / S
        let mut q = [[0.0; 2]; 2];
        for ((rho, t), w) in pw.rho.iter().zip(&pw.t).zip(&self.vertices) {
            if *rho == 0.0 {
                continue;
            }
            let c = rho * (two_m - 1.0) / (t * t);
            for i in 0..2 {
                for j in 0..2 {
                    q[i][j] += c * w[i] * w[j];
                }
            }
        }
        let r2 = dot(p, p);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                q[i][j] += pw.rho_mu * (id / r2 + (two_m - 2.0) * p[i] * p[j] / (r2 * r2));
            }
        }
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = pw.sigma * (q[i][j] - (two_m - 1.0) * g[i] * g[j]);
            }
        }
        self.mask_mat(h)
    }

    /// `(log Σ exp(s_k), softmax(s))` with `s_k = ⟨w_k, p⟩/ε`.
    fn softmax(&self, p: Vec2) -> (f64, Vec<f64>) {
        let s: Vec<f64> = self.vertices.iter().map(|&w| dot(w, p) / self.eps).collect();
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = e.iter().sum();
        (top + z.ln(), e.iter().map(|v| v / z).collect())
    }

    fn power_weights(&self, p: Vec2) -> Option<PowerWeights> {
        let r = norm(p);
        if r == 0.0 {
            return None;
        }
        let two_m = 2.0 * f64::from(self.m);
        let t: Vec<f64> = self.vertices.iter().map(|&w| dot(w, p)).collect();
        let mut logs: Vec<f64> = t
            .iter()
            .map(|v| if *v == 0.0 { f64::NEG_INFINITY } else { two_m * v.abs().ln() })
            .collect();
        logs.push(self.log_mu + two_m * r.ln());
        let lse = log_sum_exp(&logs);
        let rho: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
        let rho_mu = rho[t.len()];
        Some(PowerWeights {
            sigma: (lse / two_m).exp(),
            rho: rho[..t.len()].to_vec(),
            rho_mu,
            t,
        })
    }

    fn mask(&self, g: Vec2) -> Vec2 {
        if self.dim == 1 {
            [g[0], 0.0]
        } else {
            g
        }
    }

    fn mask_mat(&self, h: Mat2) -> Mat2 {
        if self.dim == 1 {
            [[h[0][0], 0.0], [0.0, 0.0]]
        } else {
            h
        }
    }
}

/// Two-point mean and curvature along one box axis. Beyond `|x| = 40` the
/// minority weight `e^{−|x|} < 5e−18` is dropped.
#[inline]
fn box_axis(eps: f64, lo: f64, d: f64, p: f64) -> (f64, f64) {
    let inv = 1.0 / eps;
    let x = d * p * inv;
    if x.abs() > 40.0 {
        // the minority weight is below 1e−17
        return (if x > 0.0 { lo + d } else { lo } + eps * p, eps);
    }
    let e = (-x.abs()).exp();
    let r = 1.0 / (1.0 + e);
    let s = if x >= 0.0 { r } else { e * r };
    (lo + d * s + eps * p, inv * d * d * e * r * r + eps)
}

struct PowerWeights {
    sigma: f64,
    rho: Vec<f64>,
    rho_mu: f64,
    t: Vec<f64>,
}

impl PowerWeights {
    /// `∇ log σ_m = Σ ρ_k w_k / t_k + ρ_μ p / |p|²`.
    fn log_gradient(&self, p: Vec2, vertices: &[Vec2]) -> Vec2 {
        let r2 = dot(p, p);
        let mut g = [self.rho_mu * p[0] / r2, self.rho_mu * p[1] / r2];
        for ((rho, t), w) in self.rho.iter().zip(&self.t).zip(vertices) {
            if *rho == 0.0 {
                continue;
            }
            g[0] += rho * w[0] / t;
            g[1] += rho * w[1] / t;
        }
        g
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_sigma_is_l1() {
        let a = Anisotropy::square();
        assert_eq!(a.eval_sigma(&[3.0, 4.0]).unwrap(), 7.0);
        assert_eq!(a.eval_sigma(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(a.eval_sigma(&[-3.0, 4.0]).unwrap(), 7.0);
    }

    #[test]
    fn square_polar_is_sup_norm() {
        let a = Anisotropy::square();
        assert!((a.eval_polar(&[0.5, -2.0]).unwrap() - 2.0).abs() < 1e-15);
        for w in a.vertices() {
            assert!((a.eval_polar(w).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(a.eval_polar(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn interval_polar() {
        let a = Anisotropy::interval(-2.0, 0.5).unwrap();
        assert_eq!(a.eval_polar(&[1.0]).unwrap(), 2.0);
        assert_eq!(a.eval_polar(&[-1.0]).unwrap(), 0.5);
        assert_eq!(a.eval_sigma(&[1.0]).unwrap(), 0.5);
        assert_eq!(a.eval_sigma(&[-1.0]).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_wulff_shapes() {
        assert_eq!(
            Anisotropy::planar(&[[1.0, 1.0], [2.0, 1.0], [1.0, 2.0]]).unwrap_err(),
            AnisotropyError::OriginNotInterior
        );
        assert_eq!(
            Anisotropy::planar(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.1, 0.1]]).unwrap_err(),
            AnisotropyError::NotConvexPosition(4)
        );
        assert_eq!(
            Anisotropy::planar(&[[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]]).unwrap_err(),
            AnisotropyError::DegenerateHull
        );
        assert_eq!(Anisotropy::interval(0.5, 1.0).unwrap_err(), AnisotropyError::OriginNotInterior);
        assert!(matches!(Anisotropy::new(3, &[]), Err(AnisotropyError::Dimension(3))));
    }

    #[test]
    fn faces_of_the_square() {
        let a = Anisotropy::square();
        let f = a.subdifferential_face(&[1.0, 0.0], None).unwrap();
        let mut act: Vec<Vec2> = f.active_vertices.iter().map(|&k| a.vertices()[k]).collect();
        act.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(act, vec![[1.0, -1.0], [1.0, 1.0]]);
        assert_eq!(f.dim, 1);
        assert_eq!(f.tangent, vec![[0.0, 1.0]]);
        assert_eq!(f.normal, vec![[1.0, 0.0]]);

        let f = a.subdifferential_face(&[1.0, 0.3], None).unwrap();
        assert_eq!(f.dim, 0);
        assert_eq!(a.vertices()[f.active_vertices[0]], [1.0, 1.0]);

        let f = a.subdifferential_face(&[0.0, 0.0], None).unwrap();
        assert_eq!(f.dim, 2);
        assert_eq!(f.active_vertices.len(), 4);
        assert!(f.normal.is_empty());
    }

    #[test]
    fn slice_of_square_edge_is_abs() {
        let a = Anisotropy::square();
        let s = a.slice(&[1.0, 0.0]).unwrap();
        assert_eq!(s.dim(), 1);
        let mut v: Vec<f64> = s.vertices().iter().map(|w| w[0]).collect();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(v, vec![-1.0, 1.0]);
        assert_eq!(a.slice(&[1.0, 0.3]).unwrap_err(), AnisotropyError::ZeroDimensionalFace);
    }

    #[test]
    fn slice_of_offset_edge_has_no_gauge() {
        // the edge x = 1 of this quadrilateral projects onto [0.5, 3]
        let a = Anisotropy::planar(&[[1.0, 0.5], [1.0, 3.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let s = a.slice(&[1.0, 0.0]).unwrap();
        assert_eq!(s.eval_polar(&[1.0]).unwrap_err(), AnisotropyError::DegenerateHull);
        assert_eq!(s.eval_sigma(&[-1.0]).unwrap(), -0.5);
    }

    #[test]
    fn mode_a_gradient_vanishes_at_origin_for_symmetric_shapes() {
        let r = Anisotropy::square().regularize(RegularizationMode::A, 8).unwrap();
        let g = r.gradient(&[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn mode_b_needs_symmetry() {
        let a = Anisotropy::planar(&[[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]]).unwrap();
        assert_eq!(a.regularize(RegularizationMode::B, 4).unwrap_err(), AnisotropyError::AsymmetricModeB);
        assert!(a.regularize(RegularizationMode::A, 4).is_ok());
    }

    #[test]
    fn mode_b_approaches_sigma_from_above() {
        let a = Anisotropy::square();
        let mut prev = f64::INFINITY;
        for m in [1, 2, 4, 8, 16, 32, 64, 128] {
            let r = a.regularize(RegularizationMode::B, m).unwrap();
            let v = r.eval(&[1.0, 1.0]).unwrap();
            assert!(v >= 2.0 && v < prev, "m={m} v={v}");
            prev = v;
            if m == 64 {
                assert!((v - 2.0) / 2.0 < 0.01);
            }
        }
    }

    #[test]
    fn box_detection() {
        assert!(Anisotropy::square().is_box());
        assert!(!Anisotropy::diamond().is_box());
        assert!(Anisotropy::interval(-1.0, 2.0).unwrap().is_box());
    }

    #[test]
    fn box_closed_form_matches_softmax() {
        let a = Anisotropy::planar(&[[-1.0, -0.5], [2.0, -0.5], [2.0, 1.0], [-1.0, 1.0]]).unwrap();
        let r = a.regularize(RegularizationMode::A, 16).unwrap();
        for p in [[0.0, 0.0], [0.3, -0.02], [-1.0, 0.7], [0.01, 5.0]] {
            let (g, h) = r.grad_hess_a(p);
            let gs = r.grad(p);
            assert!((g[0] - gs[0]).abs() < 1e-12 && (g[1] - gs[1]).abs() < 1e-12, "{p:?}");
            let d = 1e-6;
            for i in 0..2 {
                let mut q = p;
                q[i] += d;
                let gp = r.grad(q);
                q[i] -= 2.0 * d;
                let gm = r.grad(q);
                for j in 0..2 {
                    let fd = (gp[j] - gm[j]) / (2.0 * d);
                    assert!((fd - h[j][i]).abs() <= 1e-5 * (1.0 + h[j][i].abs()), "{p:?} {i}{j}");
                }
            }
        }
    }
}

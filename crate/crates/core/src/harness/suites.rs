//! Seeded randomized property suites: facet-speed laws for the prox and
//! taut-string solvers, and ordering of level-set evolutions.
//!
//! Every case draws from its own ChaCha8 stream `(suite, case)` of the run
//! seed, so a single case regenerates without replaying the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anisotropy::{Anisotropy, RegularizedAnisotropy};
use crate::facet1d::{self, EdgeRule, FacetProblem1D};
use crate::forcing::{Forcing, Shape, Tent};
use crate::grid::{Boundary, Grid, ScalarField};
use crate::levelset::{self, Mobility, SchemeOptions};
use crate::tvprox::{self, MinimalDivergence, MinimalDivergenceOptions};

/// Stream of one case of one suite.
pub fn case_rng(seed: u64, suite: u32, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(suite) << 32) | case as u64);
    rng
}

pub const SHIFT: u32 = 1;
pub const COMPARISON: u32 = 2;
pub const SENSITIVITY: u32 = 3;
pub const ORACLE: u32 = 4;
pub const PAIRS: u32 = 5;

/// A periodic 1D profile with one facet `{ψ = 0}` on cells `first..=last`.
#[derive(Debug, Clone)]
pub struct FacetField {
    pub psi: ScalarField,
    pub first: usize,
    pub last: usize,
    /// Dual field pinned on the edges left of `first` and right of `last`.
    pub theta: (f64, f64),
}

impl FacetField {
    /// The facet as a stand-alone taut-string problem with per-cell forcing.
    pub fn problem(&self, fc: &[f64]) -> facet1d::Result<FacetProblem1D> {
        let g = &self.psi.grid;
        let x_lo = g.lo[0] + self.first as f64 * g.h;
        let x_hi = g.lo[0] + (self.last + 1) as f64 * g.h;
        FacetProblem1D::new(x_lo, x_hi, self.theta.0, self.theta.1, fc[self.first..=self.last].to_vec())
    }
}

/// Random periodic profile: a facet of 1/8 to 1/3 of the torus, random signs
/// on either side and a piecewise-linear profile of random slope elsewhere.
/// The complement never vanishes at a cell center.
pub fn random_facet_field(rng: &mut impl Rng, cells: usize, size: f64) -> FacetField {
    let g = Grid::line(cells, -0.5 * size, 0.5 * size).expect("positive size");
    let h = g.h;
    let nf = rng.gen_range(cells / 8..=cells / 3).max(2);
    let first = rng.gen_range(1..cells - nf);
    let last = first + nf - 1;
    let w = cells - nf;
    let s_left: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut s_right: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    if w % 2 == 1 {
        // a sign change would need a zero crossing at a cell center
        s_right = s_left;
    }
    let slope = rng.gen_range(0.5..2.0);
    let wl = w as f64 * h;
    let mut values = vec![0.0; cells];
    for j in 0..w {
        let u = (j as f64 + 0.5) * h;
        let shape = if s_left == s_right {
            s_right * u.min(wl - u)
        } else if u <= 0.25 * wl {
            s_right * u
        } else if u <= 0.75 * wl {
            s_right * (0.5 * wl - u)
        } else {
            s_right * (u - wl)
        };
        values[(last + 1 + j) % cells] = slope * shape;
    }
    let psi = ScalarField::new(g, Boundary::Periodic, values).expect("finite values");
    FacetField { psi, first, last, theta: (-s_left, s_right) }
}

fn random_tents(rng: &mut impl Rng, count: usize, c: (f64, f64)) -> Vec<Tent> {
    (0..count)
        .map(|_| Tent { c: rng.gen_range(c.0..c.1), r: rng.gen_range(0.3..1.0), center: [rng.gen_range(-1.0..1.0), 0.0] })
        .collect()
}

/// Sum of one to three tents inside `[−2, 2]` plus a constant.
pub fn random_forcing(rng: &mut impl Rng) -> Forcing {
    let k = rng.gen_range(1..=3);
    let tents = random_tents(rng, k, (-3.0, 3.0));
    let offset = rng.gen_range(-1.0..1.0);
    Forcing::new(1, Shape::SumOfTents(tents)).expect("valid tents").with_offset(offset)
}

/// Profile with the given cell signs and unit magnitude.
fn sign_field(grid: Grid, signs: &[i8]) -> ScalarField {
    ScalarField::new(grid, Boundary::Periodic, signs.iter().map(|&s| f64::from(s)).collect()).expect("finite")
}

/// Random periodic sign pattern of two to six runs of at least three cells,
/// with at least one zero run.
fn random_signs(rng: &mut impl Rng, cells: usize) -> Vec<i8> {
    loop {
        let runs = rng.gen_range(2..=6usize);
        let mut cuts: Vec<usize> = Vec::new();
        while cuts.len() < runs {
            let c = rng.gen_range(0..cells);
            if cuts.iter().all(|&d| c.abs_diff(d).min(cells - c.abs_diff(d)) >= 3) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        let mut signs = vec![0i8; cells];
        let mut prev: i8 = 2;
        for (k, &start) in cuts.iter().enumerate() {
            let mut s = rng.gen_range(-1..=1i8);
            while s == prev {
                s = rng.gen_range(-1..=1i8);
            }
            prev = s;
            let end = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + cells };
            for c in start..end {
                signs[c % cells] = s;
            }
        }
        if signs.contains(&0) {
            return signs;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LipRecord {
    pub suite: &'static str,
    pub case: usize,
    pub a: f64,
    pub lip_psi: f64,
    pub lip_psi_a: f64,
    pub bound: f64,
}

impl LipRecord {
    pub fn violated(&self) -> bool {
        self.lip_psi_a > self.bound
    }
}

/// Resolvent Lipschitz bound `Lip(ψ_a) ≤ Lip(ψ) + a·L_f + 2h·L_f` for every resolvent
/// behind a minimal-divergence computation.
fn lip_records(suite: &'static str, case: usize, psi: &ScalarField, f: &Forcing, md: &MinimalDivergence) -> Vec<LipRecord> {
    let lf = f.lipschitz();
    let lip = psi.lipschitz();
    md.results
        .iter()
        .map(|r| LipRecord {
            suite,
            case,
            a: r.a,
            lip_psi: lip,
            lip_psi_a: r.psi_a.lipschitz(),
            bound: lip + r.a * lf + 2.0 * psi.grid.h * lf,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftRecord {
    pub case: usize,
    pub cells: usize,
    pub c: f64,
    /// `max |Λ_{f+c} − (Λ_f − c)|` on facet cells.
    pub prox_error: f64,
    pub taut_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRecord {
    pub case: usize,
    pub cells: usize,
    pub common_cells: usize,
    /// `max (Λ_{f₁}[ψ₁] − Λ_{f₂}[ψ₂])₊` on common facet cells.
    pub prox_violation: f64,
    pub taut_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRecord {
    pub case: usize,
    pub cells: usize,
    /// `max |f₁ − f₂|` over cells.
    pub m: f64,
    pub prox_max: f64,
    pub taut_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub case: usize,
    pub cells: usize,
    pub facet_cells: usize,
    pub max_diff: f64,
}

#[derive(Debug)]
pub struct SuiteError {
    pub suite: &'static str,
    pub case: usize,
    pub message: String,
}

impl std::fmt::Display for SuiteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} case {}: {}", self.suite, self.case, self.message)
    }
}

impl std::error::Error for SuiteError {}

fn wrap<T, E: std::fmt::Display>(suite: &'static str, case: usize, r: Result<T, E>) -> Result<T, SuiteError> {
    r.map_err(|e| SuiteError { suite, case, message: e.to_string() })
}

/// Parameters shared by the facet-speed suites.
#[derive(Debug, Clone)]
pub struct FacetSuite<'a> {
    pub seed: u64,
    pub size: f64,
    pub min_cells: usize,
    pub max_cells: usize,
    pub aniso: &'a Anisotropy,
    pub opts: &'a MinimalDivergenceOptions,
}

impl FacetSuite<'_> {
    fn cells(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min_cells..=self.max_cells)
    }

    fn md(&self, suite: &'static str, case: usize, psi: &ScalarField, f: &Forcing) -> Result<MinimalDivergence, SuiteError> {
        wrap(suite, case, tvprox::minimal_divergence(psi, f, self.aniso, self.opts))
    }

    /// Exact facet speeds of every cell of `psi` by taut strings.
    fn taut(&self, suite: &'static str, case: usize, psi: &ScalarField, f: &Forcing) -> Result<Vec<f64>, SuiteError> {
        let fc = f.cell_values(&psi.grid, 0.0);
        wrap(suite, case, facet1d::profile_speed(&psi.values, &fc, psi.grid.h, EdgeRule::Periodic, self.opts.facet_threshold))
    }

    /// Constant-shift law `Λ_{f+c} = Λ_f − c`, `c ∈ [−5, 5]`.
    pub fn shift(&self, cases: usize, lip: &mut Vec<LipRecord>) -> Result<Vec<ShiftRecord>, SuiteError> {
        const NAME: &str = "constant_shift";
        let mut out = Vec::with_capacity(cases);
        for case in 0..cases {
            let mut rng = case_rng(self.seed, SHIFT, case);
            let cells = self.cells(&mut rng);
            let ff = random_facet_field(&mut rng, cells, self.size);
            let f = random_forcing(&mut rng);
            let c = rng.gen_range(-5.0..5.0);
            let fs = f.clone().with_offset(c);
            let (m0, m1) = (self.md(NAME, case, &ff.psi, &f)?, self.md(NAME, case, &ff.psi, &fs)?);
            lip.extend(lip_records(NAME, case, &ff.psi, &f, &m0));
            lip.extend(lip_records(NAME, case, &ff.psi, &fs, &m1));
            let prox_error = m0.lambda.iter().zip(&m1.lambda).map(|(a, b)| (b - (a - c)).abs()).fold(0.0, f64::max);
            let (t0, t1) = (self.taut(NAME, case, &ff.psi, &f)?, self.taut(NAME, case, &ff.psi, &fs)?);
            let taut_error = m0.cells.iter().map(|&k| (t1[k] - (t0[k] - c)).abs()).fold(0.0, f64::max);
            out.push(ShiftRecord { case, cells, c, prox_error, taut_error });
        }
        Ok(out)
    }

    /// Comparison of facet speeds: `sign ψ₁ ≤ sign ψ₂` and `f₁ ≥ f₂` give
    /// `Λ_{f₁}[ψ₁] ≤ Λ_{f₂}[ψ₂]` on common facet cells.
    pub fn comparison(&self, cases: usize, lip: &mut Vec<LipRecord>) -> Result<Vec<ComparisonRecord>, SuiteError> {
        const NAME: &str = "comparison";
        let mut out = Vec::with_capacity(cases);
        for case in 0..cases {
            let mut rng = case_rng(self.seed, COMPARISON, case);
            let cells = self.cells(&mut rng);
            let grid = Grid::line(cells, -0.5 * self.size, 0.5 * self.size).expect("positive size");
            let s2 = random_signs(&mut rng, cells);
            let s1 = loop {
                let t = random_signs(&mut rng, cells);
                let s1: Vec<i8> = s2.iter().zip(&t).map(|(a, b)| *a.min(b)).collect();
                if s1.iter().zip(&s2).any(|(a, b)| *a == 0 && *b == 0) {
                    break s1;
                }
            };
            let (psi1, psi2) = (sign_field(grid, &s1), sign_field(grid, &s2));
            let f2 = random_forcing(&mut rng);
            let Shape::SumOfTents(mut tents) = f2.shape().clone() else { unreachable!("random forcing is a sum of tents") };
            let extra = rng.gen_range(0..=2);
            tents.extend(random_tents(&mut rng, extra, (0.0, 3.0)));
            let f1 = Forcing::new(1, Shape::SumOfTents(tents)).expect("valid tents").with_offset(f2.offset() + rng.gen_range(0.0..1.0));
            let (m1, m2) = (self.md(NAME, case, &psi1, &f1)?, self.md(NAME, case, &psi2, &f2)?);
            lip.extend(lip_records(NAME, case, &psi1, &f1, &m1));
            lip.extend(lip_records(NAME, case, &psi2, &f2, &m2));
            let (t1, t2) = (self.taut(NAME, case, &psi1, &f1)?, self.taut(NAME, case, &psi2, &f2)?);
            let mut common = 0;
            let (mut pv, mut tv) = (0.0f64, 0.0f64);
            for (p1, &k) in m1.cells.iter().enumerate() {
                if let Some(p2) = m2.cells.iter().position(|&j| j == k) {
                    common += 1;
                    pv = pv.max(m1.lambda[p1] - m2.lambda[p2]);
                    tv = tv.max(t1[k] - t2[k]);
                }
            }
            out.push(ComparisonRecord { case, cells, common_cells: common, prox_violation: pv, taut_violation: tv });
        }
        Ok(out)
    }

    /// Bounded sensitivity `max |Λ_{f₁} − Λ_{f₂}| ≤ max |f₁ − f₂|`.
    pub fn sensitivity(&self, cases: usize, lip: &mut Vec<LipRecord>) -> Result<Vec<SensitivityRecord>, SuiteError> {
        const NAME: &str = "sensitivity";
        let mut out = Vec::with_capacity(cases);
        for case in 0..cases {
            let mut rng = case_rng(self.seed, SENSITIVITY, case);
            let cells = self.cells(&mut rng);
            let ff = random_facet_field(&mut rng, cells, self.size);
            let f1 = random_forcing(&mut rng);
            let Shape::SumOfTents(mut tents) = f1.shape().clone() else { unreachable!("random forcing is a sum of tents") };
            let extra = rng.gen_range(1..=2);
            tents.extend(random_tents(&mut rng, extra, (-1.0, 1.0)));
            let f2 = Forcing::new(1, Shape::SumOfTents(tents)).expect("valid tents").with_offset(f1.offset() + rng.gen_range(-0.5..0.5));
            let g = &ff.psi.grid;
            let (c1, c2) = (f1.cell_values(g, 0.0), f2.cell_values(g, 0.0));
            let m = c1.iter().zip(&c2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let (m1, m2) = (self.md(NAME, case, &ff.psi, &f1)?, self.md(NAME, case, &ff.psi, &f2)?);
            lip.extend(lip_records(NAME, case, &ff.psi, &f1, &m1));
            lip.extend(lip_records(NAME, case, &ff.psi, &f2, &m2));
            let prox_max = m1.lambda.iter().zip(&m2.lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let (t1, t2) = (self.taut(NAME, case, &ff.psi, &f1)?, self.taut(NAME, case, &ff.psi, &f2)?);
            let taut_max = m1.cells.iter().map(|&k| (t1[k] - t2[k]).abs()).fold(0.0, f64::max);
            out.push(SensitivityRecord { case, cells, m, prox_max, taut_max });
        }
        Ok(out)
    }

    /// Prox-based minimal divergence against the taut string of the facet.
    pub fn oracle(&self, cases: usize, lip: &mut Vec<LipRecord>) -> Result<Vec<OracleRecord>, SuiteError> {
        const NAME: &str = "oracle";
        let mut out = Vec::with_capacity(cases);
        for case in 0..cases {
            let mut rng = case_rng(self.seed, ORACLE, case);
            let cells = self.cells(&mut rng);
            let ff = random_facet_field(&mut rng, cells, self.size);
            let f = random_forcing(&mut rng);
            let md = self.md(NAME, case, &ff.psi, &f)?;
            lip.extend(lip_records(NAME, case, &ff.psi, &f, &md));
            let fc = f.cell_values(&ff.psi.grid, 0.0);
            let string = wrap(NAME, case, ff.problem(&fc).and_then(|p| facet1d::solve(&p)))?;
            let mut max_diff = 0.0f64;
            for (k, cell) in (ff.first..=ff.last).enumerate() {
                let Some(pos) = md.cells.iter().position(|&c| c == cell) else {
                    return Err(SuiteError { suite: NAME, case, message: format!("cell {cell} missing from the facet") });
                };
                max_diff = max_diff.max((md.lambda[pos] - string.lambda[k]).abs());
            }
            out.push(OracleRecord { case, cells, facet_cells: ff.last - ff.first + 1, max_diff });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub case: usize,
    pub max_violation: f64,
    pub min_gap: f64,
    pub dt: f64,
    pub steps: usize,
}

/// Random ordered initial data `u₀ ≤ v₀`: `u₀` is the minimum of three
/// Wulff cones below `top`, and `v₀` adds three nonnegative round bumps.
pub fn random_ordered_pair(rng: &mut impl Rng, grid: Grid, aniso: &Anisotropy, top: f64) -> (ScalarField, ScalarField) {
    let cones: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| ([rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)], rng.gen_range(0.2..0.4), rng.gen_range(1.0..1.5)))
        .collect();
    let bumps: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| ([rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)], rng.gen_range(0.1..0.4), rng.gen_range(0.0..0.1)))
        .collect();
    let dim = grid.dim;
    let base = |x: [f64; 2]| {
        cones
            .iter()
            .map(|(c, r, s)| s * aniso.eval_polar(&[x[0] - c[0], x[1] - c[1]][..dim]).expect("finite gauge") - r)
            .fold(f64::INFINITY, f64::min)
    };
    let bump = |x: [f64; 2]| bumps.iter().map(|(c, r, a)| a * (1.0 - (x[0] - c[0]).hypot(x[1] - c[1]) / r).max(0.0)).sum::<f64>();
    let u0 = ScalarField::from_fn(grid, Boundary::Exterior(top), |x| base(x).min(top)).expect("finite");
    let v0 = ScalarField::from_fn(grid, Boundary::Exterior(top), |x| (base(x) + bump(x)).min(top)).expect("finite");
    (u0, v0)
}

/// Parameters of the ordered-pairs suite.
pub struct PairSuite<'a> {
    pub seed: u64,
    pub grid: Grid,
    pub aniso: &'a Anisotropy,
    pub reg: &'a RegularizedAnisotropy,
    pub mobility: &'a Mobility,
    pub forcing: &'a Forcing,
    pub t_end: f64,
    pub top: f64,
    pub scheme: &'a SchemeOptions,
}

impl PairSuite<'_> {
    pub fn run(&self, cases: usize) -> Result<Vec<PairRecord>, SuiteError> {
        (0..cases)
            .map(|case| {
                let mut rng = case_rng(self.seed, PAIRS, case);
                let (u0, v0) = random_ordered_pair(&mut rng, self.grid, self.aniso, self.top);
                let c = wrap(
                    "ordered_pairs",
                    case,
                    levelset::compare_evolutions(&u0, &v0, self.reg, self.mobility, self.forcing, self.t_end, self.scheme),
                )?;
                Ok(PairRecord { case, max_violation: c.max_violation, min_gap: c.min_gap, dt: c.dt, steps: c.steps })
            })
            .collect()
    }
}

//! Scenario runners. Each writes its artifacts, `config.toml` and
//! `manifest.json` under the output directory and returns the embedded
//! checks.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::config::{Command, ConfigError, RunConfig, Scenario};
use super::output::{num, write_csv, write_svg, write_text, Series};
use super::suites::{FacetSuite, LipRecord, PairSuite};
use crate::facet1d::{self, CertificateOptions, ExplicitSolution, Facet1dError, FacetOdeOptions, FacetProblem1D};
use crate::forcing::Forcing;
use crate::levelset::{self, EvolveOptions, HolderFit, LevelSet, LevelSetError};
use crate::tvprox::{self, ProxError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scenario}: {source}")]
    Facet1d { scenario: Scenario, source: Facet1dError },
    #[error("{scenario}: {source}")]
    Prox { scenario: Scenario, source: ProxError },
    #[error("{scenario}: {source}")]
    LevelSet { scenario: Scenario, source: LevelSetError },
    #[error("{scenario}: {0}", scenario = .0.suite)]
    Suite(#[from] super::suites::SuiteError),
    #[error("{scenario}: writing {path}: {source}")]
    Io { scenario: Scenario, path: PathBuf, source: std::io::Error },
}

/// One embedded acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: "<=", passed: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, relation: ">=", passed: value >= limit }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub seed: u64,
    pub out: PathBuf,
    pub checks: Vec<Check>,
    pub children: Vec<Report>,
    pub seconds: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.children.iter().all(Report::passed)
    }

    /// Reports of this run and all nested runs, depth first.
    pub fn flatten(&self) -> Vec<&Report> {
        let mut v = vec![self];
        for c in &self.children {
            v.extend(c.flatten());
        }
        v
    }

    /// Command that reruns exactly this scenario.
    pub fn regenerate(&self) -> String {
        let cmd = self.scenario.command();
        format!("facetflow {} --config {} --seed {}", cmd.name(), self.out.join("config.toml").display(), self.seed)
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn io<T>(&self, path: &Path, r: std::io::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Io { scenario: self.cfg.scenario, path: path.to_path_buf(), source })
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
        let p = self.path(name);
        self.io(&p, write_csv(&p, header, rows))
    }

    fn text(&self, name: &str, text: &str) -> Result<(), RunError> {
        let p = self.path(name);
        self.io(&p, write_text(&p, text))
    }

    fn svg(&self, name: &str, title: &str, series: &[Series], equal_axes: bool) -> Result<(), RunError> {
        let p = self.path(name);
        self.io(&p, write_svg(&p, title, series, equal_axes))
    }

    fn facet<T>(&self, r: facet1d::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Facet1d { scenario: self.cfg.scenario, source })
    }

    fn prox<T>(&self, r: tvprox::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Prox { scenario: self.cfg.scenario, source })
    }

    fn level<T>(&self, r: levelset::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::LevelSet { scenario: self.cfg.scenario, source })
    }
}

/// Runs `cfg` with artifacts under `out`. `jobs` bounds the scenarios run
/// concurrently by the suite.
pub fn run(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Report, RunError> {
    let start = Instant::now();
    let ctx = Ctx { cfg, out };
    ctx.io(out, std::fs::create_dir_all(out))?;
    ctx.text("config.toml", &cfg.to_toml())?;
    let mut children = Vec::new();
    let checks = match cfg.scenario {
        Scenario::Prox => prox(&ctx)?,
        Scenario::ProxProperties => prox_properties(&ctx)?,
        Scenario::Facet1d => facet1d_run(&ctx, true, true)?,
        Scenario::Explicit1d => facet1d_run(&ctx, true, false)?,
        Scenario::Nonexistence => facet1d_run(&ctx, false, true)?,
        Scenario::Evolve | Scenario::LipBound | Scenario::WulffShrink => evolve(&ctx)?,
        Scenario::OrderedPairs => ordered_pairs(&ctx)?,
        Scenario::All => {
            children = suite(cfg.seed, out, jobs)?;
            Vec::new()
        }
    };
    let report = Report { scenario: cfg.scenario, seed: cfg.seed, out: out.to_path_buf(), checks, children, seconds: start.elapsed().as_secs_f64() };
    ctx.csv(
        "checks.csv",
        &["name", "value", "relation", "limit", "passed"],
        report.checks.iter().map(|c| vec![c.name.clone(), num(c.value), c.relation.into(), num(c.limit), c.passed.to_string()]),
    )?;
    let manifest = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "generator": "ChaCha8",
        "config": cfg,
        "passed": report.passed(),
        "checks": report.checks,
        "children": report.children.iter().map(|c| c.scenario).collect::<Vec<_>>(),
    });
    ctx.text("manifest.json", &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(report)
}

fn suite(seed: u64, out: &Path, jobs: usize) -> Result<Vec<Report>, RunError> {
    let names = Scenario::REGISTRY;
    let jobs = jobs.clamp(1, names.len());
    let mut slots: Vec<Option<Result<Report, RunError>>> = (0..names.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(&scenario) = names.get(k) else { break };
                let cfg = RunConfig::defaults(scenario, seed);
                let r = run(&cfg, &out.join(scenario.name()), 1);
                results.lock().expect("no worker panicked")[k] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every scenario ran")).collect()
}

fn lip_rows(records: &[LipRecord]) -> impl Iterator<Item = Vec<String>> + '_ {
    records.iter().map(|r| {
        vec![r.suite.into(), r.case.to_string(), num(r.a), num(r.lip_psi), num(r.lip_psi_a), num(r.bound), r.violated().to_string()]
    })
}

const LIP_HEADER: [&str; 7] = ["suite", "case", "a", "lip_psi", "lip_psi_a", "bound", "violated"];

fn prox(ctx: &Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.need(&cfg.grid, "grid")?.build()?;
    let aniso = cfg.need(&cfg.anisotropy, "anisotropy")?.build()?;
    let f = cfg.need(&cfg.forcing, "forcing")?.build(grid.dim)?;
    let psi = cfg.need(&cfg.initial, "initial")?.build(grid, &aniso, true)?;
    let popts = cfg.need(&cfg.prox, "prox")?;
    let opts = popts.build()?;
    let md = ctx.prox(tvprox::minimal_divergence(&psi, &f, &aniso, &opts))?;

    let mut rows = Vec::new();
    for r in &md.results {
        for k in 0..grid.len() {
            let x = grid.center_of(k);
            rows.push(vec![num(r.a), k.to_string(), num(x[0]), num(x[1]), num(psi.values[k]), num(r.psi_a.values[k])]);
        }
    }
    ctx.csv("psi_a.csv", &["a", "cell", "x", "y", "psi", "psi_a"], rows)?;
    let band = md.band();
    ctx.csv(
        "lambda.csv",
        &["cell", "x", "y", "lambda", "band_min", "band_max"],
        md.cells.iter().enumerate().map(|(p, &k)| {
            let x = grid.center_of(k);
            vec![k.to_string(), num(x[0]), num(x[1]), num(md.lambda[p]), num(band[p].0), num(band[p].1)]
        }),
    )?;
    ctx.csv(
        "convergence.csv",
        &["a", "iteration", "residual"],
        md.results.iter().flat_map(|r| r.history.iter().map(move |&(it, res)| vec![num(r.a), it.to_string(), num(res)])),
    )?;
    let lip = lip_record_list(&psi, &f, &md);
    ctx.csv("lipschitz.csv", &LIP_HEADER, lip_rows(&lip))?;

    let mut checks = vec![
        Check::at_most("resolvent residual", md.results.iter().map(|r| r.residual).fold(0.0, f64::max), popts.tol),
        Check::at_most("resolvent lipschitz violations", lip.iter().filter(|r| r.violated()).count() as f64, 0.0),
    ];
    if grid.dim == 1 {
        let fc = f.cell_values(&grid, 0.0);
        let exact = ctx.facet(facet1d::profile_speed(&psi.values, &fc, grid.h, facet1d::EdgeRule::Periodic, opts.facet_threshold))?;
        let diff = md.cells.iter().zip(&md.lambda).map(|(&k, l)| (l - exact[k]).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("prox vs taut string", diff, ORACLE_TOL));
    }
    Ok(checks)
}

fn lip_record_list(psi: &crate::grid::ScalarField, f: &Forcing, md: &tvprox::MinimalDivergence) -> Vec<LipRecord> {
    let lf = f.lipschitz();
    let lip = psi.lipschitz();
    md.results
        .iter()
        .map(|r| LipRecord {
            suite: "prox",
            case: 0,
            a: r.a,
            lip_psi: lip,
            lip_psi_a: r.psi_a.lipschitz(),
            bound: lip + r.a * lf + 2.0 * psi.grid.h * lf,
        })
        .collect()
}

pub const SHIFT_TOL: f64 = 1e-6;
pub const COMPARISON_TOL: f64 = 1e-5;
pub const SENSITIVITY_TOL: f64 = 1e-5;
pub const ORACLE_TOL: f64 = 1e-4;

fn prox_properties(ctx: &Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let aniso = cfg.need(&cfg.anisotropy, "anisotropy")?.build()?;
    if aniso.dim() != 1 {
        return Err(ConfigError::Key { key: "anisotropy".into(), message: "property suites run in one dimension".into() }.into());
    }
    let opts = cfg.need(&cfg.prox, "prox")?.build()?;
    let p = cfg.need(&cfg.properties, "properties")?;
    let suite = FacetSuite { seed: cfg.seed, size: p.size, min_cells: p.min_cells, max_cells: p.max_cells, aniso: &aniso, opts: &opts };
    let mut lip = Vec::new();

    let shift = suite.shift(p.shift_cases, &mut lip)?;
    ctx.csv(
        "constant_shift.csv",
        &["case", "cells", "c", "prox_error", "taut_error"],
        shift.iter().map(|r| vec![r.case.to_string(), r.cells.to_string(), num(r.c), num(r.prox_error), num(r.taut_error)]),
    )?;
    let comparison = suite.comparison(p.comparison_cases, &mut lip)?;
    ctx.csv(
        "comparison.csv",
        &["case", "cells", "common_cells", "prox_violation", "taut_violation"],
        comparison.iter().map(|r| {
            vec![r.case.to_string(), r.cells.to_string(), r.common_cells.to_string(), num(r.prox_violation), num(r.taut_violation)]
        }),
    )?;
    let sensitivity = suite.sensitivity(p.sensitivity_cases, &mut lip)?;
    ctx.csv(
        "sensitivity.csv",
        &["case", "cells", "m", "prox_max", "taut_max"],
        sensitivity.iter().map(|r| vec![r.case.to_string(), r.cells.to_string(), num(r.m), num(r.prox_max), num(r.taut_max)]),
    )?;
    let oracle = suite.oracle(p.oracle_cases, &mut lip)?;
    ctx.csv(
        "oracle.csv",
        &["case", "cells", "facet_cells", "max_diff"],
        oracle.iter().map(|r| vec![r.case.to_string(), r.cells.to_string(), r.facet_cells.to_string(), num(r.max_diff)]),
    )?;
    ctx.csv("lipschitz.csv", &LIP_HEADER, lip_rows(&lip))?;

    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("constant shift (prox)", max(&mut shift.iter().map(|r| r.prox_error)), SHIFT_TOL),
        Check::at_most("constant shift (taut string)", max(&mut shift.iter().map(|r| r.taut_error)), SHIFT_TOL),
        Check::at_most("comparison (prox)", max(&mut comparison.iter().map(|r| r.prox_violation)), COMPARISON_TOL),
        Check::at_most("comparison (taut string)", max(&mut comparison.iter().map(|r| r.taut_violation)), COMPARISON_TOL),
        Check::at_most("sensitivity excess (prox)", max(&mut sensitivity.iter().map(|r| r.prox_max - r.m)), SENSITIVITY_TOL),
        Check::at_most("sensitivity excess (taut string)", max(&mut sensitivity.iter().map(|r| r.taut_max - r.m)), SENSITIVITY_TOL),
        Check::at_most("prox vs taut string", max(&mut oracle.iter().map(|r| r.max_diff)), ORACLE_TOL),
        Check::at_most("resolvent lipschitz violations", lip.iter().filter(|r| r.violated()).count() as f64, 0.0),
    ])
}

fn facet1d_run(ctx: &Ctx, explicit: bool, certificate: bool) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.need(&cfg.grid, "grid")?.build()?;
    if grid.dim != 1 {
        return Err(ConfigError::Key { key: "grid.dim".into(), message: "facet1d runs in one dimension".into() }.into());
    }
    let f = cfg.need(&cfg.forcing, "forcing")?.build(1)?;
    let fc = cfg.need(&cfg.facet1d, "facet1d")?;
    let mut checks = Vec::new();

    // The generic scenario falls back to the certificate when the forcing has
    // no interior facet length.
    let solution = match ExplicitSolution::new(&f) {
        Ok(s) => Some(s),
        Err(e) if explicit && !certificate => return Err(RunError::Facet1d { scenario: cfg.scenario, source: e }),
        Err(_) => None,
    };
    if let (true, Some(sol)) = (explicit, &solution) {
        let ell = sol.ell;
        let residual = facet1d::tangency_residual(&f, ell);
        ctx.text("ell.txt", &format!("ell = {}\nresidual = {}\nfacet_speed = {}\n", num(ell), num(residual), num(sol.facet_speed())))?;
        checks.push(Check::at_most("facet length residual", residual.abs(), fc.ell_tol));

        let cells = ((2.0 * ell / fc.string_h).round() as usize).max(2);
        let problem = ctx.facet(FacetProblem1D::from_forcing(&f, -ell, ell, cells, -1.0, 1.0))?;
        let string = ctx.facet(facet1d::solve(&problem))?;
        ctx.csv(
            "string.csv",
            &["x", "lower", "upper", "y"],
            (0..string.x.len()).map(|k| vec![num(string.x[k]), num(string.lower[k]), num(string.upper[k]), num(string.y[k])]),
        )?;
        let (lo, hi) = string.lambda.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
        checks.push(Check::at_most("string speed spread", hi - lo, fc.constancy_tol));
        let mean = string.lambda.iter().sum::<f64>() / string.lambda.len() as f64;
        checks.push(Check::at_most("string speed vs -f(ell)", (mean - sol.facet_speed()).abs(), fc.speed_tol));

        let time = cfg.need(&cfg.time, "time")?;
        let dt = time.dt.ok_or_else(|| ConfigError::Key { key: "time.dt".into(), message: "missing".into() })?;
        let emit = time.emit_every.map_or(1, |e| ((e / dt).round() as usize).max(1));
        let opts = FacetOdeOptions { t_end: time.t_end, dt, emit_every: emit, ..FacetOdeOptions::default() };
        let traj = ctx.facet(facet1d::evolve_facet_ode(&f, &vec![0.0; grid.n[0]], &grid, &opts))?;
        let mut err = 0.0f64;
        let mut rows = Vec::new();
        for (t, u) in &traj.frames {
            for (x, v) in traj.x.iter().zip(u) {
                let exact = sol.eval(*x, *t);
                err = err.max((v - exact).abs());
                rows.push(vec![num(*t), num(*x), num(*v), num(exact)]);
            }
        }
        ctx.csv("trajectory.csv", &["t", "x", "u", "exact"], rows)?;
        checks.push(Check::at_most("trajectory vs explicit solution", err, fc.trajectory_tol));
    }
    if certificate && (!explicit || solution.is_none()) {
        let c = cfg.need(&cfg.certificate, "certificate")?;
        let report = ctx.facet(facet1d::nonexistence_certificate(&f, &CertificateOptions { cells: c.cells, test_factor: c.test_factor, margin: c.margin }))?;
        ctx.text("certificate.json", &serde_json::to_string_pretty(&report).expect("report serializes"))?;
        checks.push(Check::at_least("certificate issued", f64::from(u8::from(report.issued())), 1.0));
        let barrier = report.barrier.as_ref().map_or(f64::NEG_INFINITY, |b| b.lambda_min - report.max_f);
        checks.push(Check::at_least("barrier speed minus max f", barrier, -c.margin));
        checks.push(Check::at_least("witness -speed + f", report.witness_value.unwrap_or(f64::NEG_INFINITY), c.margin));
    }
    Ok(checks)
}

/// Frame indices written to disk: at most six, evenly spread, first and
/// last included.
fn written_frames(count: usize) -> Vec<usize> {
    const MAX: usize = 6;
    if count <= MAX {
        return (0..count).collect();
    }
    let mut v: Vec<usize> = (0..MAX).map(|i| (i * (count - 1) + (MAX - 1) / 2) / (MAX - 1)).collect();
    v.dedup();
    v
}

fn evolve(ctx: &Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.need(&cfg.grid, "grid")?.build()?;
    let aniso = cfg.need(&cfg.anisotropy, "anisotropy")?.build()?;
    let f = cfg.need(&cfg.forcing, "forcing")?.build(grid.dim)?;
    let init = cfg.need(&cfg.initial, "initial")?;
    let u0 = init.build(grid, &aniso, false)?;
    let reg = cfg.need(&cfg.regularization, "regularization")?.build(&aniso)?;
    let mob = cfg.need(&cfg.mobility, "mobility")?.build()?;
    let time = cfg.need(&cfg.time, "time")?;
    let scheme = cfg.need(&cfg.scheme, "scheme")?.build(time.dt)?;
    let checks_cfg = cfg.need(&cfg.checks, "checks")?;
    let svg = cfg.output.as_ref().is_some_and(|o| o.svg);
    let emit_every = time.emit_every.unwrap_or(time.t_end / 20.0);
    let opts = EvolveOptions { t_end: time.t_end, emit_every, scheme, gauge: Some(aniso.clone()) };
    let traj = ctx.level(levelset::evolve(&u0, &reg, &mob, &f, &opts))?;

    let g = &grid;
    let mut contours: Vec<(f64, Vec<levelset::Polyline>)> = Vec::new();
    for k in written_frames(traj.frames.len()) {
        let fr = &traj.frames[k];
        ctx.csv(
            &format!("frames/u_{k}.csv"),
            &["i", "j", "x", "y", "u"],
            (0..g.len()).map(|c| {
                let (i, j) = g.coords(c);
                let x = g.center(i, j);
                vec![i.to_string(), j.to_string(), num(x[0]), num(x[1]), num(fr.u.values[c])]
            }),
        )?;
        let lines = match levelset::extract_level_set(&fr.u, 0.0) {
            Ok(LevelSet::Polylines(l)) => l,
            Ok(LevelSet::Points(p)) => vec![levelset::Polyline { points: p.iter().map(|&x| [x, 0.0]).collect(), closed: false }],
            Err(_) => Vec::new(),
        };
        ctx.csv(
            &format!("contour_{k}.csv"),
            &["line", "x", "y"],
            lines.iter().enumerate().flat_map(|(l, pl)| pl.points.iter().map(move |p| vec![l.to_string(), num(p[0]), num(p[1])])),
        )?;
        contours.push((fr.t, lines));
    }
    if svg && grid.dim == 2 {
        let labels: Vec<String> = contours.iter().map(|(t, _)| format!("t = {t:.4}")).collect();
        let mut series = Vec::new();
        for ((_, lines), label) in contours.iter().zip(&labels) {
            for (n, pl) in lines.iter().enumerate() {
                series.push(Series { label: if n == 0 { label } else { "" }, points: &pl.points, closed: pl.closed });
            }
        }
        ctx.svg("contours.svg", "zero level set", &series, true)?;
    }

    let l0 = traj.diagnostics[0].lip;
    let m = mob.lipschitz() * f.lipschitz();
    let bound = |t: f64| l0 * (m * t).exp() * checks_cfg.lip_factor;
    ctx.csv(
        "diagnostics.csv",
        &["t", "lip", "lip_bound", "min", "max", "gauge_min", "gauge_max"],
        traj.diagnostics.iter().map(|d| {
            let (a, b) = d.gauge.map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
            vec![num(d.t), num(d.lip), num(bound(d.t)), num(d.min), num(d.max), a, b]
        }),
    )?;
    let excess = traj.diagnostics.iter().map(|d| d.lip / bound(d.t)).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("lipschitz / (L e^{Mt} factor)", excess, 1.0),
        Check::at_most("explicit step load", traj.max_load, 1.0),
    ];
    if svg {
        let lip: Vec<[f64; 2]> = traj.diagnostics.iter().map(|d| [d.t, d.lip]).collect();
        let lim: Vec<[f64; 2]> = traj.diagnostics.iter().map(|d| [d.t, bound(d.t)]).collect();
        ctx.svg(
            "lipschitz.svg",
            "Lipschitz constant",
            &[Series { label: "Lip u", points: &lip, closed: false }, Series { label: "bound", points: &lim, closed: false }],
            false,
        )?;
    }

    if let (Some(min), Some(probes)) = (checks_cfg.holder_min, &checks_cfg.probes) {
        let mut rows = Vec::new();
        for p in probes {
            let fit = ctx.level(levelset::holder_fit(&traj, *p))?;
            let name = format!("holder exponent at ({}, {})", num(p[0]), num(p[1]));
            match fit {
                HolderFit::Static => {
                    rows.push(vec![num(p[0]), num(p[1]), "static".into(), String::new(), "0".into()]);
                    checks.push(Check::at_least(name, f64::INFINITY, min));
                }
                HolderFit::Fit { exponent, constant, pairs } => {
                    rows.push(vec![num(p[0]), num(p[1]), num(exponent), num(constant), pairs.to_string()]);
                    checks.push(Check::at_least(name, exponent, min));
                }
            }
        }
        ctx.csv("holder.csv", &["x", "y", "exponent", "constant", "pairs"], rows)?;
    }

    if let Some(tol) = checks_cfg.radius_tol {
        let series = ctx.level(levelset::wulff_radius(&traj, &aniso))?;
        let r0 = init.radius;
        let stop = checks_cfg.stop_ratio.unwrap_or(0.0) * r0;
        let dims = (grid.dim - 1) as f64;
        let exact = |t: f64| (r0 * r0 - 2.0 * dims * t).max(0.0).sqrt();
        let (mut worst_r, mut worst_band, mut covered) = (0.0f64, 0.0f64, true);
        let mut rows = Vec::new();
        let mut points = [Vec::new(), Vec::new(), Vec::new()];
        for fr in &traj.frames {
            let r = exact(fr.t);
            if r < stop * (1.0 - 1e-9) {
                break;
            }
            let Some(k) = series.t.iter().position(|&t| t == fr.t) else {
                covered = false;
                break;
            };
            let (lo, hi) = (series.r_min[k], series.r_max[k]);
            let mid = 0.5 * (lo + hi);
            let (rel, band) = ((mid - r) / r, (hi - lo) / r);
            worst_r = worst_r.max(rel.abs());
            worst_band = worst_band.max(band);
            rows.push(vec![num(fr.t), num(r), num(lo), num(hi), num(rel), num(band)]);
            points[0].push([fr.t, r]);
            points[1].push([fr.t, lo]);
            points[2].push([fr.t, hi]);
        }
        ctx.csv("wulff.csv", &["t", "exact", "gauge_min", "gauge_max", "relative_error", "band"], rows)?;
        if svg {
            ctx.svg(
                "wulff.svg",
                "gauge radius",
                &[
                    Series { label: "exact", points: &points[0], closed: false },
                    Series { label: "gauge min", points: &points[1], closed: false },
                    Series { label: "gauge max", points: &points[2], closed: false },
                ],
                false,
            )?;
        }
        checks.push(Check::at_least("zero level set present until the stop radius", f64::from(u8::from(covered)), 1.0));
        checks.push(Check::at_most("gauge radius relative error", worst_r, tol));
        if let Some(b) = checks_cfg.band_tol {
            checks.push(Check::at_most("gauge band / radius", worst_band, b));
        }
    }
    Ok(checks)
}

fn ordered_pairs(ctx: &Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.need(&cfg.grid, "grid")?.build()?;
    let aniso = cfg.need(&cfg.anisotropy, "anisotropy")?.build()?;
    let f = cfg.need(&cfg.forcing, "forcing")?.build(grid.dim)?;
    let reg = cfg.need(&cfg.regularization, "regularization")?.build(&aniso)?;
    let mob = cfg.need(&cfg.mobility, "mobility")?.build()?;
    let time = cfg.need(&cfg.time, "time")?;
    let scheme = cfg.need(&cfg.scheme, "scheme")?.build(time.dt)?;
    let p = cfg.need(&cfg.pairs, "pairs")?;
    let suite = PairSuite { seed: cfg.seed, grid, aniso: &aniso, reg: &reg, mobility: &mob, forcing: &f, t_end: time.t_end, top: p.top, scheme: &scheme };
    let records = suite.run(p.cases)?;
    ctx.csv(
        "pairs.csv",
        &["case", "max_violation", "min_gap", "dt", "steps"],
        records.iter().map(|r| vec![r.case.to_string(), num(r.max_violation), num(r.min_gap), num(r.dt), r.steps.to_string()]),
    )?;
    let worst = records.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    Ok(vec![Check::at_most("ordering violation", worst, p.tolerance)])
}

/// Default output directory: `$FACETFLOW_OUT/<scenario>`, else
/// `./facetflow_out/<scenario>`.
pub fn default_out(scenario: Scenario) -> PathBuf {
    let base = std::env::var_os("FACETFLOW_OUT").map_or_else(|| PathBuf::from("facetflow_out"), PathBuf::from);
    base.join(scenario.name())
}

/// Parses `text` for `command`, overriding the seed when given.
pub fn load(text: &str, command: Command, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    let mut cfg = super::config::parse_config_for(text, command)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

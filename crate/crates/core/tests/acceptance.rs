//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero when any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use facetflow::facet1d::{self, ExplicitSolution, FacetOdeOptions, FacetProblem1D};
use facetflow::forcing::Forcing;
use facetflow::grid::Grid;
use facetflow::harness::{self, Check, Command, Report, RunConfig, Scenario, DEFAULT_SEED};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome { passed, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

fn describe(c: &Check) -> String {
    format!("{} = {:.4e} {} {:.1e}", c.name, c.value, c.relation, c.limit)
}

/// Passes when every selected check passes and the run met its time limit.
fn from_checks(report: &Report, select: impl Fn(&Check) -> bool, limit_s: Option<f64>) -> Outcome {
    let chosen: Vec<&Check> = report.checks.iter().filter(|c| select(c)).collect();
    let mut passed = !chosen.is_empty() && chosen.iter().all(|c| c.passed);
    let mut parts: Vec<String> = chosen.iter().map(|c| describe(c)).collect();
    if let Some(limit) = limit_s {
        passed &= report.seconds < limit;
        parts.push(format!("runtime {:.1} s < {limit} s", report.seconds));
    }
    Outcome::new(passed, parts.join("; "))
}

fn scenario(name: &str, out: &Path) -> Result<Report, String> {
    let s = Scenario::from_name(name).ok_or("unknown scenario")?;
    let cfg = RunConfig::defaults(s, DEFAULT_SEED);
    harness::run(&cfg, &out.join(name), 1).map_err(|e| e.to_string())
}

fn facet_length_closed_form() -> Outcome {
    let start = Instant::now();
    let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
    let ell = match facet1d::solve_ell(&f) {
        Ok(l) => l,
        Err(e) => return Outcome::error(e),
    };
    let ell_err = (ell - (2.0f64 / 3.0).sqrt()).abs();
    let cells = (2.0 * ell / 1e-3).round() as usize;
    let r = match FacetProblem1D::from_forcing(&f, -ell, ell, cells, -1.0, 1.0).and_then(|p| facet1d::solve(&p)) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let (lo, hi) = r.lambda.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
    let target = -0.550510;
    let off = r.lambda.iter().map(|l| (l - target).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        ell_err <= 1e-6 && hi - lo <= 1e-3 && off <= 1e-3 && secs < 1.0,
        format!("ell = {ell:.9} (err {ell_err:.1e}); speed spread {:.1e}; max |speed + 0.550510| {off:.1e}; runtime {secs:.3} s < 1 s", hi - lo),
    )
}

fn explicit_solution() -> Outcome {
    let start = Instant::now();
    let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
    let sol = match ExplicitSolution::new(&f) {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    let grid = Grid::line(4000, -2.0, 2.0).unwrap();
    let opts = FacetOdeOptions { t_end: 0.1, dt: 1e-4, emit_every: 10, ..FacetOdeOptions::default() };
    let traj = match facet1d::evolve_facet_ode(&f, &vec![0.0; 4000], &grid, &opts) {
        Ok(t) => t,
        Err(e) => return Outcome::error(e),
    };
    let mut err = 0.0f64;
    for (t, u) in &traj.frames {
        for (x, v) in traj.x.iter().zip(u) {
            err = err.max((v - sol.eval(*x, *t)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(err <= 1e-3 && secs < 10.0, format!("sup error {err:.3e} <= 1e-3 over {} frames; runtime {secs:.2} s < 10 s", traj.frames.len()))
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&d) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap_or_default());
            }
        }
    }
    out
}

fn reproducibility(root: &Path) -> Outcome {
    let runs = [
        ("prox", Command::Prox, String::new()),
        ("prox_properties", Command::Prox, String::new()),
        ("explicit1d", Command::Facet1d, String::new()),
        ("nonexistence", Command::Facet1d, String::new()),
        ("lip_bound", Command::Evolve, "[grid]\nn = 48\n[time]\nT = 0.01\nemit_every = 0.001\n".into()),
        ("ordered_pairs", Command::Evolve, "[grid]\nn = 48\n[time]\nT = 0.005\n[pairs]\ncases = 4\n".into()),
    ];
    let mut files = 0;
    for (name, command, extra) in runs {
        let text = format!("scenario = \"{name}\"\n{extra}");
        let cfg = match harness::load(&text, command, Some(DEFAULT_SEED)) {
            Ok(c) => c,
            Err(e) => return Outcome::error(e),
        };
        let (a, b) = (root.join(format!("repro/{name}/a")), root.join(format!("repro/{name}/b")));
        for dir in [&a, &b] {
            if let Err(e) = harness::run(&cfg, dir, 1) {
                return Outcome::error(e);
            }
        }
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        if fa.is_empty() || fa != fb {
            let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
            return Outcome::new(false, format!("{name}: CSVs differ ({differing:?})"));
        }
        files += fa.len();
    }
    Outcome::new(true, format!("{files} CSV files byte-identical across two runs of 6 scenarios"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let root = dir.path();
    let mut failures = 0;
    let mut report = |number: usize, title: &str, outcome: Outcome| {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        failures += usize::from(!outcome.passed);
        println!("{tag} criterion {number:>2} ({title}): {}", outcome.detail);
    };

    report(1, "facet length closed form", facet_length_closed_form());
    report(2, "explicit solution", explicit_solution());

    match scenario("prox_properties", root) {
        Ok(r) => {
            report(3, "constant shift", from_checks(&r, |c| c.name.starts_with("constant shift"), None));
            report(4, "comparison of facet speeds", from_checks(&r, |c| c.name.starts_with("comparison"), None));
            report(5, "bounded sensitivity", from_checks(&r, |c| c.name.starts_with("sensitivity"), None));
            report(6, "prox vs taut string", from_checks(&r, |c| c.name == "prox vs taut string", None));
            report(7, "resolvent Lipschitz bound", from_checks(&r, |c| c.name == "resolvent lipschitz violations", None));
        }
        Err(e) => {
            for (n, t) in [(3, "constant shift"), (4, "comparison"), (5, "sensitivity"), (6, "oracle"), (7, "resolvent Lipschitz")] {
                report(n, t, Outcome::error(&e));
            }
        }
    }

    match scenario("lip_bound", root) {
        Ok(r) => {
            report(8, "Lipschitz growth bound", from_checks(&r, |c| c.name.starts_with("lipschitz /"), Some(120.0)));
            let holder = from_checks(&r, |c| c.name.starts_with("holder exponent"), None);
            let probes = r.checks.iter().filter(|c| c.name.starts_with("holder exponent")).count();
            report(9, "Hölder regularity in time", Outcome::new(holder.passed && probes >= 5, holder.detail));
        }
        Err(e) => {
            report(8, "Lipschitz growth bound", Outcome::error(&e));
            report(9, "Hölder regularity in time", Outcome::error(&e));
        }
    }

    report(
        10,
        "Wulff shrinking law",
        scenario("wulff_shrink", root).map_or_else(Outcome::error, |r| {
            from_checks(&r, |c| c.name.starts_with("gauge") || c.name.starts_with("zero level set"), Some(300.0))
        }),
    );
    report(
        11,
        "discrete comparison",
        scenario("ordered_pairs", root).map_or_else(Outcome::error, |r| from_checks(&r, |c| c.name == "ordering violation", None)),
    );
    report(12, "nonexistence certificate", scenario("nonexistence", root).map_or_else(Outcome::error, |r| from_checks(&r, |_| true, None)));
    report(13, "reproducibility", reproducibility(root));

    println!("{} of 13 criteria passed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

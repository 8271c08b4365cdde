use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use facetflow::harness::{self, Command, Report};

#[derive(Parser)]
#[command(name = "facetflow", version, about = "Facet speeds, anisotropic TV resolvents and crystalline level-set flow")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory [default: $FACETFLOW_OUT/<scenario> or ./facetflow_out/<scenario>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios run concurrently by `suite`.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Resolvents and minimal divergence (scenarios prox, prox_properties).
    Prox(RunArgs),
    /// One-dimensional facets (scenarios facet1d, explicit1d, nonexistence).
    Facet1d(RunArgs),
    /// Level-set evolution (scenarios evolve, lip_bound, wulff_shrink, ordered_pairs).
    Evolve(RunArgs),
    /// Every registered scenario with its defaults.
    Suite(RunArgs),
}

fn print(report: &Report) {
    for r in report.flatten() {
        for c in &r.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!("{tag} {}: {} = {:e} {} {:e}", r.scenario, c.name, c.value, c.relation, c.limit);
        }
        if !r.checks.is_empty() {
            println!("  {} finished in {:.1} s, artifacts in {}", r.scenario, r.seconds, r.out.display());
        }
        if !r.checks.iter().all(|c| c.passed) {
            println!("  regenerate with: {}", r.regenerate());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Prox(a) => (Command::Prox, a),
        Cmd::Facet1d(a) => (Command::Facet1d, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Suite(a) => (Command::Suite, a),
    };
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let cfg = match harness::load(&text, command, args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.unwrap_or_else(|| harness::default_out(cfg.scenario));
    match harness::run(&cfg, &out, args.jobs) {
        Ok(report) => {
            print(&report);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use smomp_core::experiment::{benchmark_solvers, run_experiment, ExperimentConfig, SolverChoice};
use smomp_core::selftest::run_selftest;

#[global_allocator]
static ALLOC: smomp_core::alloc::CountingAllocator = smomp_core::alloc::CountingAllocator;

/// Separable multidimensional OMP: mmWave channel-estimation campaigns,
/// solver benchmarks and a self-test.
#[derive(Parser)]
#[command(name = "smomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write trials.csv, timings.csv and summary.json.
    Run(Common),
    /// Time the solvers on one instance and write bench.csv.
    Bench(Common),
    /// Check the solvers against independent references.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverChoice>,
    /// Memory budget for the dense reference solver, in MiB.
    #[arg(long)]
    budget_mb: Option<u64>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverChoice, String> {
    s.parse().map_err(|e: smomp_core::Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(b) = self.budget_mb {
            cfg.budget_mb = b;
        }
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.load()?;
    let report = run_experiment(&cfg)?;
    report.write(&cfg.out_dir)?;
    println!(
        "{:>9} {:>6} {:>7} {:>12} {:>12} {:>10}",
        "power", "solver", "trials", "ang_err_deg", "pos_err_m", "nmse_db"
    );
    for p in &report.points {
        let m = |k: &str| p.metrics.get(k).and_then(|s| s.median);
        println!(
            "{:>9.1} {:>6} {:>7} {:>12} {:>12} {:>10}",
            p.power_dbm,
            p.solver,
            p.n_trials,
            fmt_opt(m("angular_error_deg"), 4),
            fmt_opt(m("position_error_m"), 4),
            fmt_opt(m("nmse_db"), 2),
        );
    }
    println!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn bench(common: &Common) -> Result<()> {
    let cfg = common.load()?;
    let report = benchmark_solvers(&cfg)?;
    report.write(&cfg.out_dir)?;
    println!(
        "{:>6} {:>13} {:>14} {:>14} {:>15} {:>12}",
        "solver", "status", "formula_bytes", "dense_bytes", "peak_aux_bytes", "median_s"
    );
    for r in &report.rows {
        println!(
            "{:>6} {:>13} {:>14} {:>14} {:>15} {:>12}",
            r.solver,
            r.status,
            r.formula_bytes,
            r.dense_bytes,
            r.peak_aux_bytes
                .map_or_else(|| "-".into(), |b| b.to_string()),
            fmt_opt(r.median_seconds, 6),
        );
    }
    println!("wrote {}", cfg.out_dir.join("bench.csv").display());
    Ok(())
}

fn selftest(seed: u64) -> Result<bool> {
    let mut ok = true;
    for o in run_selftest(seed)? {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
        ok &= o.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c).map(|_| true),
        Command::Bench(c) => bench(c).map(|_| true),
        Command::Selftest { seed } => selftest(seed.unwrap_or(0)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

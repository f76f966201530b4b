//! Configuration-driven Monte-Carlo campaigns and solver benchmarks.
//!
//! Every trial draws its scene and noise from a ChaCha8 generator seeded
//! with the master seed, using stream `2t` for the scene and `2t + 1` for
//! the noise of trial `t`. The same streams are reused at every power point,
//! so power points differ only in transmit power.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alloc::measure_peak;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg;
use crate::mmwave::capacity::{achieved_spectral_efficiency, spectral_efficiency};
use crate::mmwave::estimate::{
    angular_error, channel_nmse, estimate_position, extract_paths, reconstruct_taps,
};
use crate::mmwave::problem::{assemble_problem, channel_dictionaries};
use crate::mmwave::scene::{gen_channel_taps, generate_scene, ChannelScene, SceneMode};
use crate::mmwave::sounding::{
    build_frames, sound_channel, sound_noiseless, whiten_frames, whiten_observations, SoundingFrame,
};
use crate::mmwave::system::{dbm_to_mw, SystemConfig};
use crate::momp::{densify, momp_solve};
use crate::smomp::{smomp_solve, SeparableProblem};
use crate::solution::{SolverConfig, SparseSolution};

/// Config files must carry this `schema_version`.
pub const SCHEMA_VERSION: u32 = 1;

const BYTES_PER_ENTRY: u64 = std::mem::size_of::<Complex64>() as u64;

/// Which solvers a campaign or benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Smomp,
    Momp,
    Both,
}

impl SolverChoice {
    pub fn solvers(self) -> &'static [SolverKind] {
        match self {
            SolverChoice::Smomp => &[SolverKind::Smomp],
            SolverChoice::Momp => &[SolverKind::Momp],
            SolverChoice::Both => &[SolverKind::Smomp, SolverKind::Momp],
        }
    }

    fn includes_momp(self) -> bool {
        self != SolverChoice::Smomp
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smomp" => Ok(SolverChoice::Smomp),
            "momp" => Ok(SolverChoice::Momp),
            "both" => Ok(SolverChoice::Both),
            other => Err(Error::Config(format!(
                "unknown solver {other:?}; expected smomp, momp or both"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverKind {
    Smomp,
    Momp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Smomp => "smomp",
            SolverKind::Momp => "momp",
        }
    }
}

/// A named preset plus field overrides, e.g.
///
/// ```toml
/// [system]
/// preset = "system1-desk"
/// k_res = 4
/// ```
///
/// Without a preset every [`SystemConfig`] field must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(flatten)]
    pub overrides: toml::Table,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            preset: Some("system1-desk".into()),
            overrides: toml::Table::new(),
        }
    }
}

impl SystemSpec {
    pub fn resolve(&self) -> Result<SystemConfig> {
        let mut table = match &self.preset {
            Some(name) => toml::Table::try_from(SystemConfig::preset(name)?)
                .map_err(|e| Error::Serialization(e.to_string()))?,
            None => toml::Table::new(),
        };
        for (k, v) in &self.overrides {
            table.insert(k.clone(), v.clone());
        }
        let cfg: SystemConfig = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_power() -> Vec<f64> {
    vec![0.0, 10.0, 20.0]
}
fn default_trials() -> usize {
    20
}
fn default_atoms() -> usize {
    3
}
fn default_one() -> usize {
    1
}
fn default_subcarriers() -> usize {
    64
}
fn default_budget() -> u64 {
    1024
}
fn default_reps() -> usize {
    10
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// One campaign: the system, the power sweep, the estimator settings and
/// where to write the reports. See the README for the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemSpec,
    /// Transmit power sweep in dBm.
    #[serde(default = "default_power")]
    pub power_dbm: Vec<f64>,
    /// Overrides the system noise power, in dBm.
    #[serde(default)]
    pub noise_dbm: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverChoice,
    /// Paths extracted per trial.
    #[serde(default = "default_atoms")]
    pub n_atoms: usize,
    #[serde(default = "default_one")]
    pub refinement_sweeps: usize,
    /// Paths per synthesized scene.
    #[serde(default = "default_atoms")]
    pub n_paths: usize,
    #[serde(default)]
    pub scene: SceneMode,
    /// Skip the receiver noise entirely.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_subcarriers")]
    pub n_subcarriers: usize,
    #[serde(default)]
    pub seed: u64,
    /// Largest dense measurement tensor the reference solver may allocate.
    #[serde(default = "default_budget")]
    pub budget_mb: u64,
    #[serde(default = "default_reps")]
    pub bench_repetitions: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str(&format!("schema_version = {SCHEMA_VERSION}")).expect("defaults parse")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn budget_bytes(&self) -> u128 {
        self.budget_mb as u128 * 1024 * 1024
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            n_atoms: self.n_atoms,
            refinement_sweeps: self.refinement_sweeps,
            ..Default::default()
        }
    }

    /// Resolved system at the first sweep point, after every check that can
    /// be made without running a trial.
    pub fn validate(&self) -> Result<SystemConfig> {
        let mut sys = self.system.resolve()?;
        if let Some(n) = self.noise_dbm {
            sys.noise_mw = dbm_to_mw(n);
        }
        if self.power_dbm.is_empty() {
            return Err(Error::Config(
                "power_dbm must list at least one point".into(),
            ));
        }
        if let Some(p) = self.power_dbm.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("power {p} dBm is not finite")));
        }
        if let Some((i, p)) = self
            .power_dbm
            .iter()
            .enumerate()
            .find(|(i, p)| self.power_dbm[..*i].contains(p))
        {
            return Err(Error::Config(format!(
                "power {p} dBm is listed twice (entry {i})"
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if self.bench_repetitions == 0 {
            return Err(Error::Config("bench_repetitions must be at least 1".into()));
        }
        if self.n_subcarriers < sys.delay_taps {
            return Err(Error::Config(format!(
                "n_subcarriers {} is below the {} delay taps",
                self.n_subcarriers, sys.delay_taps
            )));
        }
        sys.power_mw = dbm_to_mw(self.power_dbm[0]);
        sys.validate()?;
        let dicts = channel_dictionaries(&sys)?;
        let atoms: Vec<usize> = dicts.iter().map(Dictionary::n_atoms).collect();
        self.solver_config().validate(&atoms)?;
        Ok(sys)
    }
}

/// Per-trial metrics; one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub power_dbm: f64,
    pub trial: usize,
    pub solver: &'static str,
    pub n_paths: usize,
    pub n_selected: usize,
    /// Angle between true and estimated arrival direction of the strongest
    /// path, in degrees.
    pub angular_error_deg: f64,
    pub delay_error_s: f64,
    /// Empty for a zero channel, `-inf` for a perfect reconstruction.
    pub nmse_db: Option<f64>,
    pub se_estimated: f64,
    pub se_perfect: f64,
    pub position_valid: bool,
    pub position_error_m: Option<f64>,
    pub residual_rel: f64,
    /// Empty when no counting allocator is installed.
    pub peak_aux_bytes: Option<usize>,
}

/// Column order of `trials.csv`.
pub const TRIAL_COLUMNS: [&str; 14] = [
    "power_dbm",
    "trial",
    "solver",
    "n_paths",
    "n_selected",
    "angular_error_deg",
    "delay_error_s",
    "nmse_db",
    "se_estimated",
    "se_perfect",
    "position_valid",
    "position_error_m",
    "residual_rel",
    "peak_aux_bytes",
];

/// Wall time of one solve, kept apart from [`TrialRecord`] so that the
/// trial table is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialTiming {
    pub power_dbm: f64,
    pub trial: usize,
    pub solver: &'static str,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    /// Finite samples the statistics are computed from.
    pub n: usize,
    /// Samples left out for being infinite (a perfect NMSE).
    pub n_nonfinite: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p10: Option<f64>,
    pub p90: Option<f64>,
}

/// Linearly interpolated percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Stats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Stats {
        let all: Vec<f64> = values.into_iter().collect();
        let mut finite: Vec<f64> = all.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let n = finite.len();
        let pick = |q: f64| (n > 0).then(|| percentile(&finite, q));
        Stats {
            n,
            n_nonfinite: all.len() - n,
            mean: (n > 0).then(|| finite.iter().sum::<f64>() / n as f64),
            median: pick(0.5),
            p10: pick(0.1),
            p90: pick(0.9),
        }
    }
}

/// Aggregates of one (power, solver) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub power_dbm: f64,
    pub solver: &'static str,
    pub n_trials: usize,
    pub position_valid_fraction: Option<f64>,
    pub metrics: BTreeMap<&'static str, Stats>,
}

fn summarize(power_dbm: f64, solver: &'static str, rows: &[&TrialRecord]) -> PointSummary {
    let stat = |f: &dyn Fn(&TrialRecord) -> Option<f64>| {
        Stats::from_values(rows.iter().filter_map(|r| f(r)))
    };
    let mut metrics = BTreeMap::new();
    metrics.insert("angular_error_deg", stat(&|r| Some(r.angular_error_deg)));
    metrics.insert("delay_error_s", stat(&|r| Some(r.delay_error_s)));
    metrics.insert("nmse_db", stat(&|r| r.nmse_db));
    metrics.insert("se_estimated", stat(&|r| Some(r.se_estimated)));
    metrics.insert("se_perfect", stat(&|r| Some(r.se_perfect)));
    metrics.insert("position_error_m", stat(&|r| r.position_error_m));
    metrics.insert("residual_rel", stat(&|r| Some(r.residual_rel)));
    metrics.insert(
        "peak_aux_bytes",
        stat(&|r| r.peak_aux_bytes.map(|b| b as f64)),
    );
    let valid = rows.iter().filter(|r| r.position_valid).count();
    PointSummary {
        power_dbm,
        solver,
        n_trials: rows.len(),
        position_valid_fraction: (!rows.is_empty()).then(|| valid as f64 / rows.len() as f64),
        metrics,
    }
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub config: ExperimentConfig,
    pub system: SystemConfig,
    /// Sorted by power point, trial, then solver.
    pub trials: Vec<TrialRecord>,
    pub timings: Vec<TrialTiming>,
    pub points: Vec<PointSummary>,
}

/// Per-campaign state shared by every trial.
struct Bench {
    sys: SystemConfig,
    dicts: Vec<Dictionary>,
    frames: Vec<SoundingFrame>,
}

impl Bench {
    fn new(sys: SystemConfig) -> Result<Self> {
        let dicts = channel_dictionaries(&sys)?;
        let mut frames = build_frames(&sys)?;
        whiten_frames(&mut frames)?;
        Ok(Bench { sys, dicts, frames })
    }

    fn at_power(&self, power_dbm: f64) -> SystemConfig {
        let mut sys = self.sys.clone();
        sys.power_mw = dbm_to_mw(power_dbm);
        sys
    }
}

/// Trial `t`'s scene and noise generators.
pub fn trial_rngs(master: u64, trial: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut scene = ChaCha8Rng::seed_from_u64(master);
    scene.set_stream(2 * trial as u64);
    let mut noise = ChaCha8Rng::seed_from_u64(master);
    noise.set_stream(2 * trial as u64 + 1);
    (scene, noise)
}

/// Whitened separable problem for one scene at one power.
fn sound_and_assemble(
    bench: &Bench,
    sys: &SystemConfig,
    taps: &[Mat<Complex64>],
    noise: Option<&mut ChaCha8Rng>,
) -> Result<SeparableProblem> {
    let ys = match noise {
        Some(rng) => sound_channel(taps, &bench.frames, sys, rng),
        None => sound_noiseless(taps, &bench.frames, sys),
    };
    let whitened = whiten_observations(&bench.frames, &ys)?;
    assemble_problem(&whitened, &bench.frames, sys)
}

fn run_solver(
    kind: SolverKind,
    problem: &SeparableProblem,
    solver: &SolverConfig,
    budget: u128,
) -> Result<(SparseSolution, Option<usize>, f64)> {
    // keep the kernel's one-off per-thread buffer out of the peak
    linalg::warm_up();
    match kind {
        SolverKind::Smomp => {
            let start = Instant::now();
            let (sol, peak) = measure_peak(|| smomp_solve(problem, solver));
            Ok((sol?, peak, start.elapsed().as_secs_f64()))
        }
        SolverKind::Momp => {
            let dense = densify(problem, Some(budget))?;
            let start = Instant::now();
            let (sol, peak) = measure_peak(|| momp_solve(&dense, solver));
            Ok((sol?, peak, start.elapsed().as_secs_f64()))
        }
    }
}

struct Metrics {
    angular_error_deg: f64,
    delay_error_s: f64,
    nmse_db: Option<f64>,
    se_estimated: f64,
    se_perfect: f64,
    position_error_m: Option<f64>,
}

fn evaluate(
    scene: &ChannelScene,
    taps: &[Mat<Complex64>],
    sol: &SparseSolution,
    dicts: &[Dictionary],
    sys: &SystemConfig,
    n_subcarriers: usize,
) -> Result<Metrics> {
    let paths = extract_paths(sol, dicts, scene.tau0);
    let truth = &scene.paths[scene.strongest_path().expect("scenes have paths")];
    let est_taps = reconstruct_taps(&paths, sys, scene.tau0);
    let (angular_error_deg, delay_error_s, position_error_m) = match paths.first() {
        Some(p) => (
            angular_error(&truth.doa, &p.doa_direction(&scene.rx)),
            (p.delay - truth.delay).abs(),
            estimate_position(p, &scene.rx).map(|x| (x - scene.tx.position).norm()),
        ),
        // nothing selected: the observation was zero
        None => (180.0, (truth.delay - scene.tau0).abs(), None),
    };
    Ok(Metrics {
        angular_error_deg,
        delay_error_s,
        nmse_db: channel_nmse(taps, &est_taps),
        se_estimated: achieved_spectral_efficiency(taps, &est_taps, sys, n_subcarriers)?,
        se_perfect: spectral_efficiency(taps, sys, n_subcarriers)?,
        position_error_m,
    })
}

/// All power points and solvers of one trial.
fn run_trial(
    cfg: &ExperimentConfig,
    bench: &Bench,
    trial: usize,
) -> Result<Vec<(usize, TrialRecord, TrialTiming)>> {
    let (mut scene_rng, noise_rng) = trial_rngs(cfg.seed, trial);
    let scene = generate_scene(&bench.sys, cfg.scene, cfg.n_paths, &mut scene_rng)?;
    let taps = gen_channel_taps(&scene, &bench.sys);
    let solver = cfg.solver_config();
    let mut out = Vec::new();
    for (pi, &power_dbm) in cfg.power_dbm.iter().enumerate() {
        let sys = bench.at_power(power_dbm);
        // identical noise draws at every power point
        let mut noise = noise_rng.clone();
        let problem =
            sound_and_assemble(bench, &sys, &taps, (!cfg.noiseless).then_some(&mut noise))?;
        let obs_norm = problem.observation.norm();
        for &kind in cfg.solver.solvers() {
            let (sol, peak, seconds) = run_solver(kind, &problem, &solver, cfg.budget_bytes())?;
            let m = evaluate(&scene, &taps, &sol, &bench.dicts, &sys, cfg.n_subcarriers)?;
            let record = TrialRecord {
                power_dbm,
                trial,
                solver: kind.name(),
                n_paths: scene.paths.len(),
                n_selected: sol.len(),
                angular_error_deg: m.angular_error_deg,
                delay_error_s: m.delay_error_s,
                nmse_db: m.nmse_db,
                se_estimated: m.se_estimated,
                se_perfect: m.se_perfect,
                position_valid: m.position_error_m.is_some(),
                position_error_m: m.position_error_m,
                residual_rel: if obs_norm > 0.0 {
                    sol.final_residual_norm() / obs_norm
                } else {
                    0.0
                },
                peak_aux_bytes: peak,
            };
            let timing = TrialTiming {
                power_dbm,
                trial,
                solver: kind.name(),
                solve_seconds: seconds,
            };
            out.push((pi, record, timing));
        }
    }
    Ok(out)
}

/// Refuses a reference-solver run whose dense tensor would not fit the
/// budget, from the analytic size alone.
fn check_dense_budget(cfg: &ExperimentConfig, sys: &SystemConfig) -> Result<()> {
    let (rows, cols) = sys.dense_formula();
    let required = rows * cols * BYTES_PER_ENTRY as u128;
    if cfg.solver.includes_momp() && required > cfg.budget_bytes() {
        return Err(Error::Capacity {
            required,
            budget: cfg.budget_bytes(),
        });
    }
    Ok(())
}

/// Runs every trial at every power point. Deterministic given the config:
/// trials run on the rayon pool but results are ordered by power point,
/// trial and solver before aggregation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CampaignReport> {
    let sys = cfg.validate()?;
    check_dense_budget(cfg, &sys)?;
    if cfg.trials == 0 {
        log::warn!("trials = 0: writing an empty report");
    }
    let bench = Bench::new(sys.clone())?;
    log::info!(
        "running {} trials x {} power points with {:?}",
        cfg.trials,
        cfg.power_dbm.len(),
        cfg.solver
    );
    let done = std::sync::atomic::AtomicUsize::new(0);
    let per_trial: Vec<Vec<(usize, TrialRecord, TrialTiming)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let out = run_trial(cfg, &bench, t);
            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            log::debug!("trial {t} done ({n}/{})", cfg.trials);
            out
        })
        .collect::<Result<_>>()?;
    log::info!("all {} trials done", cfg.trials);
    let mut rows: Vec<(usize, TrialRecord, TrialTiming)> =
        per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.0, a.1.trial, a.1.solver).cmp(&(b.0, b.1.trial, b.1.solver)));
    let (trials, timings): (Vec<TrialRecord>, Vec<TrialTiming>) =
        rows.into_iter().map(|(_, r, t)| (r, t)).unzip();

    let mut points = Vec::new();
    for &power in &cfg.power_dbm {
        for &kind in cfg.solver.solvers() {
            let sel: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.power_dbm == power && r.solver == kind.name())
                .collect();
            points.push(summarize(power, kind.name(), &sel));
        }
    }
    Ok(CampaignReport {
        config: cfg.clone(),
        system: sys,
        trials,
        timings,
        points,
    })
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| Error::Serialization(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Where the numbers came from. No timestamps, so that identical inputs
/// give identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub package: &'static str,
    pub version: &'static str,
    /// Set at build time through `SMOMP_GIT_COMMIT`, `unknown` otherwise.
    pub git_commit: &'static str,
    pub config_sha256: String,
    pub trials_csv_sha256: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    system: &'a SystemConfig,
    provenance: Provenance,
    trial_columns: &'a [&'a str],
    points: &'a [PointSummary],
}

pub fn provenance(cfg: &ExperimentConfig, trials_csv: &[u8]) -> Result<Provenance> {
    let canonical = serde_json::to_vec(cfg)?;
    Ok(Provenance {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        git_commit: option_env!("SMOMP_GIT_COMMIT").unwrap_or("unknown"),
        config_sha256: sha256_hex(&canonical),
        trials_csv_sha256: sha256_hex(trials_csv),
    })
}

impl CampaignReport {
    pub fn trials_csv(&self) -> Result<Vec<u8>> {
        to_csv(&self.trials, &TRIAL_COLUMNS)
    }

    pub fn timings_csv(&self) -> Result<Vec<u8>> {
        to_csv(
            &self.timings,
            &["power_dbm", "trial", "solver", "solve_seconds"],
        )
    }

    pub fn summary_json(&self) -> Result<Vec<u8>> {
        let trials = self.trials_csv()?;
        let summary = Summary {
            schema_version: SCHEMA_VERSION,
            config: &self.config,
            system: &self.system,
            provenance: provenance(&self.config, &trials)?,
            trial_columns: &TRIAL_COLUMNS,
            points: &self.points,
        };
        let mut out = serde_json::to_vec_pretty(&summary)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes `trials.csv`, `timings.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trials.csv"), self.trials_csv()?)?;
        fs::write(dir.join("timings.csv"), self.timings_csv()?)?;
        fs::write(dir.join("summary.json"), self.summary_json()?)?;
        Ok(())
    }
}

/// One `bench.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub solver: &'static str,
    /// `ok` or `not-runnable`.
    pub status: &'static str,
    /// Dense measurement size from the closed-form expression
    /// `Q N_R N_T / M_T x N_T N_R D`.
    pub formula_rows: u64,
    pub formula_cols: u64,
    pub formula_bytes: u64,
    /// Size of the dense measurement tensor the reference solver works on.
    pub dense_bytes: u64,
    pub repetitions: usize,
    pub median_seconds: Option<f64>,
    pub min_seconds: Option<f64>,
    /// Solver workspace high-water mark; inputs excluded.
    pub peak_aux_bytes: Option<usize>,
}

pub const BENCH_COLUMNS: [&str; 10] = [
    "solver",
    "status",
    "formula_rows",
    "formula_cols",
    "formula_bytes",
    "dense_bytes",
    "repetitions",
    "median_seconds",
    "min_seconds",
    "peak_aux_bytes",
];

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn csv(&self) -> Result<Vec<u8>> {
        to_csv(&self.rows, &BENCH_COLUMNS)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bench.csv"), self.csv()?)?;
        Ok(())
    }

    pub fn row(&self, solver: SolverKind) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.solver == solver.name())
    }
}

/// Times the selected solvers on trial 0's instance at the first power
/// point. The reference solver is skipped, not failed, when its dense
/// tensor exceeds the budget; that decision uses the analytic size only.
pub fn benchmark_solvers(cfg: &ExperimentConfig) -> Result<BenchReport> {
    let sys = cfg.validate()?;
    let bench = Bench::new(sys.clone())?;
    let (mut scene_rng, mut noise_rng) = trial_rngs(cfg.seed, 0);
    let scene = generate_scene(&sys, cfg.scene, cfg.n_paths, &mut scene_rng)?;
    let taps = gen_channel_taps(&scene, &sys);
    let problem = sound_and_assemble(
        &bench,
        &sys,
        &taps,
        (!cfg.noiseless).then_some(&mut noise_rng),
    )?;
    let solver = cfg.solver_config();

    let (rows_f, cols_f) = sys.dense_formula();
    let formula_bytes = rows_f * cols_f * BYTES_PER_ENTRY as u128;
    let dense_bytes = crate::momp::dense_measurement_bytes(&problem);
    let clamp = |v: u128| u64::try_from(v).unwrap_or(u64::MAX);

    let mut rows = Vec::new();
    for &kind in cfg.solver.solvers() {
        let mut row = BenchRow {
            solver: kind.name(),
            status: "ok",
            formula_rows: clamp(rows_f),
            formula_cols: clamp(cols_f),
            formula_bytes: clamp(formula_bytes),
            dense_bytes: clamp(dense_bytes),
            repetitions: cfg.bench_repetitions,
            median_seconds: None,
            min_seconds: None,
            peak_aux_bytes: None,
        };
        if kind == SolverKind::Momp && dense_bytes > cfg.budget_bytes() {
            log::warn!(
                "momp not runnable: dense tensor needs {dense_bytes} bytes, budget is {} bytes",
                cfg.budget_bytes()
            );
            row.status = "not-runnable";
            row.repetitions = 0;
            rows.push(row);
            continue;
        }
        let mut times = Vec::with_capacity(cfg.bench_repetitions);
        for rep in 0..cfg.bench_repetitions {
            let (_, peak, seconds) = run_solver(kind, &problem, &solver, cfg.budget_bytes())?;
            if rep == 0 {
                row.peak_aux_bytes = peak;
            }
            times.push(seconds);
        }
        let stats = Stats::from_values(times.iter().copied());
        row.median_seconds = stats.median;
        row.min_seconds = times.iter().copied().reduce(f64::min);
        rows.push(row);
    }
    Ok(BenchReport { rows })
}

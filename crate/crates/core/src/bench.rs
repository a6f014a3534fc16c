//! Monte-Carlo sweeps over generated data and recovery-condition sweeps.
//!
//! A sweep visits every cell of an `(r, ν, SNR)` grid, generates `trials`
//! datasets per cell and runs each requested algorithm on them. Trial `i`
//! uses the seed `derive_seed(master_seed, i)` in every cell, so cells that
//! share `r` see the same sources. Rows are written in grid order whatever
//! the number of workers; wall-clock times go to a separate file so that
//! `trials.csv` is reproducible byte for byte.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bruteforce::{bf, compute_d, postprocess, RobustLonerParams, ThresholdForm};
use crate::error::{Error, Result};
use crate::extractors::{snpa, snpalq, spa, ExtractionConfig, ExtractionResult};
use crate::io::fmt_f64;
use crate::metrics::match_sources;
use crate::mixmodel::{DataMatrix, MixingModel};
use crate::projector::{SolverOptions, SquaredEuclidean};
use crate::synthdata::{derive_seed, gen_spectra, generate, load_spectra, GenConfig};
use crate::theory::{alpha_pi, split_sweep, split_sweep_sampled, SplitMode, MAX_EXHAUSTIVE_SOURCES};

/// Environment variable overriding the master seed of a config file.
pub const SEED_ENV: &str = "LQUNMIX_SEED";

/// Largest `n` accepted by standalone BF.
pub const BF_MAX_COLUMNS: usize = 100;

/// Extraction algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "spa")]
    Spa,
    #[serde(rename = "snpa")]
    Snpa,
    #[serde(rename = "snpalq")]
    Snpalq,
    #[serde(rename = "snpalq+bf")]
    SnpalqBf,
    #[serde(rename = "bf")]
    Bf,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Spa => "spa",
            Algo::Snpa => "snpa",
            Algo::Snpalq => "snpalq",
            Algo::SnpalqBf => "snpalq+bf",
            Algo::Bf => "bf",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spa" => Ok(Algo::Spa),
            "snpa" => Ok(Algo::Snpa),
            "snpalq" => Ok(Algo::Snpalq),
            "snpalq+bf" => Ok(Algo::SnpalqBf),
            "bf" => Ok(Algo::Bf),
            other => Err(Error::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// An algorithm together with the mixing model it assumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algo: Algo,
    /// Ignored by SPA and SNPA.
    #[serde(default = "default_model")]
    pub model: MixingModel,
}

fn default_model() -> MixingModel {
    MixingModel::Lq
}

/// Maximum number of extractions for the SNPALQ family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RMaxPolicy {
    /// The true number of sources.
    #[default]
    R,
    /// The number of data columns, so only the tolerance stops extraction.
    N,
    Fixed(usize),
}

impl RMaxPolicy {
    pub fn resolve(self, r: usize, n: usize) -> usize {
        match self {
            RMaxPolicy::R => r,
            RMaxPolicy::N => n,
            RMaxPolicy::Fixed(k) => k,
        }
    }
}

impl Serialize for RMaxPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RMaxPolicy::R => s.serialize_str("r"),
            RMaxPolicy::N => s.serialize_str("n"),
            RMaxPolicy::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for RMaxPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(usize),
        }
        match Raw::deserialize(d)? {
            Raw::Number(0) => Err(serde::de::Error::custom("r_max must be at least 1")),
            Raw::Number(k) => Ok(RMaxPolicy::Fixed(k)),
            Raw::Text(t) if t == "r" => Ok(RMaxPolicy::R),
            Raw::Text(t) if t == "n" => Ok(RMaxPolicy::N),
            Raw::Text(t) => {
                Err(serde::de::Error::custom(format!("r_max must be \"r\", \"n\" or a number, got \"{t}\"")))
            }
        }
    }
}

/// Settings shared by every trial of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    /// Relative residual tolerance of the SNPALQ family.
    pub t: f64,
    pub r_max: RMaxPolicy,
    pub solver: SolverOptions,
    pub threshold_form: ThresholdForm,
    /// Noise bound for BF; the generator's true value when absent.
    pub bf_eps: Option<f64>,
    /// Warm-start the projections of each SNPALQ step from the previous one.
    pub warm_start: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            t: 0.0,
            r_max: RMaxPolicy::R,
            solver: SolverOptions::default(),
            threshold_form: ThresholdForm::General,
            bf_eps: None,
            warm_start: false,
        }
    }
}

/// Monte-Carlo sweep description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub r: Vec<usize>,
    pub nu: Vec<f64>,
    /// `null` entries mean noiseless.
    #[serde(default = "noiseless_grid")]
    pub snr_db: Vec<Option<f64>>,
    /// Model used to generate the data.
    pub model: MixingModel,
    #[serde(default = "default_alpha")]
    pub dirichlet_alpha: f64,
    #[serde(default)]
    pub spectra: Option<PathBuf>,
    pub trials: usize,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub settings: RunSettings,
    pub master_seed: u64,
    pub output: PathBuf,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn noiseless_grid() -> Vec<Option<f64>> {
    vec![None]
}

fn default_alpha() -> f64 {
    0.5
}

impl ExperimentConfig {
    /// Reads a config file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if let Some(seed) = seed_override()? {
            cfg.master_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.r.is_empty() || self.nu.is_empty() || self.snr_db.is_empty() {
            return Err(Error::InvalidArgument("the r, nu and snr_db grids must be nonempty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("no algorithms requested".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        if !(self.settings.t >= 0.0) {
            return Err(Error::InvalidArgument("t must be nonnegative".into()));
        }
        for cell in self.cells() {
            self.gen_config(&cell, 0).validate()?;
        }
        Ok(())
    }

    /// Grid cells in output order: `r` outermost, then `ν`, then SNR.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &r in &self.r {
            for &nu in &self.nu {
                for &snr_db in &self.snr_db {
                    out.push(Cell { index: out.len(), r, nu, snr_db });
                }
            }
        }
        out
    }

    pub fn gen_config(&self, cell: &Cell, seed: u64) -> GenConfig {
        GenConfig {
            m: self.m,
            n: self.n,
            r: cell.r,
            model: self.model,
            nu: cell.nu,
            dirichlet_alpha: self.dirichlet_alpha,
            snr_db: cell.snr_db,
            seed,
            spectra: self.spectra.clone(),
        }
    }
}

/// Reads [`SEED_ENV`].
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// One point of the experiment grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub r: usize,
    pub nu: f64,
    pub snr_db: Option<f64>,
}

/// Result of one algorithm on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub algorithm: AlgorithmSpec,
    /// Extracted columns; empty on failure.
    pub indices: Vec<usize>,
    pub theta_min: Option<f64>,
    pub perfect: bool,
    /// Last relative residual of the greedy stage, when there is one.
    pub final_residual: Option<f64>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl TrialOutcome {
    pub fn k_count(&self) -> usize {
        self.indices.len()
    }
}

/// BF inputs beyond the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfContext {
    pub epsilon: f64,
    /// Order-4 margin of the sources; only used when `epsilon > 0`.
    pub alpha4: Option<f64>,
}

/// Output of [`run_algorithm`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmRun {
    pub indices: Vec<usize>,
    pub final_residual: Option<f64>,
}

fn loner_params(x: &DataMatrix, ctx: &BfContext, form: ThresholdForm) -> Result<RobustLonerParams> {
    if ctx.epsilon == 0.0 {
        return Ok(RobustLonerParams::noiseless());
    }
    let alpha4 =
        ctx.alpha4.ok_or_else(|| Error::InvalidArgument("BF with positive noise needs the order-4 margin".into()))?;
    compute_d(ctx.epsilon, x, &SquaredEuclidean, alpha4, form)
}

/// Runs one algorithm with `r` sources on `x`.
pub fn run_algorithm(
    x: &DataMatrix,
    spec: &AlgorithmSpec,
    r: usize,
    settings: &RunSettings,
    ctx: &BfContext,
) -> Result<AlgorithmRun> {
    run_algorithm_cached(x, spec, r, settings, ctx, &mut Vec::new()).map(|(run, _)| run)
}

/// Greedy SNPALQ runs already done on the same data, with their durations.
type GreedyCache = Vec<(MixingModel, ExtractionResult, f64)>;

/// [`run_algorithm`] that reuses an SNPALQ run of the same model; also
/// returns the seconds spent, including the reused greedy stage.
fn run_algorithm_cached(
    x: &DataMatrix,
    spec: &AlgorithmSpec,
    r: usize,
    settings: &RunSettings,
    ctx: &BfContext,
    cache: &mut GreedyCache,
) -> Result<(AlgorithmRun, f64)> {
    let start = Instant::now();
    let score = SquaredEuclidean;
    let greedy = ExtractionConfig {
        r_max: settings.r_max.resolve(r, x.ncols()),
        t: settings.t,
        model: spec.model,
        solver: settings.solver,
        warm_start: settings.warm_start,
    };
    // Returns the greedy result and the seconds it took when reused.
    let greedy_stage = |cache: &mut GreedyCache| -> Result<(ExtractionResult, f64)> {
        if let Some((_, res, secs)) = cache.iter().find(|(m, _, _)| *m == spec.model) {
            return Ok((res.clone(), *secs));
        }
        let t0 = Instant::now();
        let res = snpalq(x, &greedy, &score)?;
        cache.push((spec.model, res.clone(), t0.elapsed().as_secs_f64()));
        Ok((res, 0.0))
    };
    let (run, reused) = match spec.algo {
        Algo::Spa => (AlgorithmRun { indices: spa(x, r)?, final_residual: None }, 0.0),
        Algo::Snpa => {
            let cfg = ExtractionConfig { r_max: r, t: 0.0, ..greedy };
            let res = snpa(x, &cfg, &score)?;
            (AlgorithmRun { final_residual: res.final_relative_residual(), indices: res.indices }, 0.0)
        }
        Algo::Snpalq => {
            let (res, reused) = greedy_stage(cache)?;
            (AlgorithmRun { final_residual: res.final_relative_residual(), indices: res.indices }, reused)
        }
        Algo::SnpalqBf => {
            let (res, reused) = greedy_stage(cache)?;
            let params = loner_params(x, ctx, settings.threshold_form)?;
            let indices = postprocess(x, &res.indices, &params, &score, spec.model, settings.solver)?;
            (AlgorithmRun { indices, final_residual: res.final_relative_residual() }, reused)
        }
        Algo::Bf => {
            if x.ncols() > BF_MAX_COLUMNS {
                return Err(Error::InvalidArgument(format!(
                    "standalone BF is limited to {BF_MAX_COLUMNS} columns, data has {}",
                    x.ncols()
                )));
            }
            let params = loner_params(x, ctx, settings.threshold_form)?;
            let indices = bf(x, &params, &score, spec.model, settings.solver)?;
            (AlgorithmRun { indices, final_residual: None }, 0.0)
        }
    };
    Ok((run, start.elapsed().as_secs_f64() + reused))
}

/// Generates the data of one trial and runs every algorithm of `cfg` on it.
pub fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Vec<TrialOutcome> {
    let seed = derive_seed(cfg.master_seed, trial as u64);
    let failed = |spec: &AlgorithmSpec, msg: String| TrialOutcome {
        cell: *cell,
        trial,
        seed,
        algorithm: *spec,
        indices: Vec::new(),
        theta_min: None,
        perfect: false,
        final_residual: None,
        error: Some(msg),
        seconds: 0.0,
    };
    let data = match generate(&cfg.gen_config(cell, seed)) {
        Ok(d) => d,
        Err(e) => return cfg.algorithms.iter().map(|s| failed(s, format!("generation: {e}"))).collect(),
    };
    let epsilon = cfg.settings.bf_eps.unwrap_or(data.noise_eps);
    let mut alpha4_cache: Vec<(MixingModel, Result<f64>)> = Vec::new();
    let mut greedy_cache = GreedyCache::new();

    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for spec in &cfg.algorithms {
        let needs_margin = matches!(spec.algo, Algo::SnpalqBf | Algo::Bf) && epsilon > 0.0;
        let alpha4 = if needs_margin {
            if !alpha4_cache.iter().any(|(m, _)| *m == spec.model) {
                let a = alpha_pi(data.w.as_matrix(), spec.model, 4, SolverOptions::tight());
                alpha4_cache.push((spec.model, a));
            }
            match &alpha4_cache.iter().find(|(m, _)| *m == spec.model).unwrap().1 {
                Ok(a) => Some(*a),
                Err(e) => {
                    out.push(failed(spec, format!("margin: {e}")));
                    continue;
                }
            }
        } else {
            None
        };
        let ctx = BfContext { epsilon, alpha4 };
        let start = Instant::now();
        let run = run_algorithm_cached(&data.x, spec, cell.r, &cfg.settings, &ctx, &mut greedy_cache);
        let seconds = match &run {
            Ok((_, secs)) => *secs,
            Err(_) => start.elapsed().as_secs_f64(),
        };
        let outcome = run.and_then(|(run, _)| {
            let (theta_min, perfect) = if run.indices.is_empty() {
                (None, false)
            } else {
                let rep = match_sources(data.w.as_matrix(), data.x.as_matrix(), &run.indices)?;
                (Some(rep.theta_min), rep.perfect)
            };
            Ok(TrialOutcome {
                cell: *cell,
                trial,
                seed,
                algorithm: *spec,
                indices: run.indices,
                theta_min,
                perfect,
                final_residual: run.final_residual,
                error: None,
                seconds,
            })
        });
        out.push(outcome.unwrap_or_else(|e| TrialOutcome { seconds, ..failed(spec, e.to_string()) }));
    }
    out
}

/// Aggregate of one `(cell, algorithm)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub cell: Cell,
    pub algorithm: AlgorithmSpec,
    pub trials: usize,
    pub perfect: usize,
    pub failures: usize,
    pub mean_k: f64,
}

impl SummaryRow {
    pub fn perfect_pct(&self) -> f64 {
        100.0 * self.perfect as f64 / self.trials as f64
    }
}

/// Aggregates outcomes per cell and algorithm, in first-appearance order.
pub fn summarize(outcomes: &[TrialOutcome]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut k_sums: Vec<usize> = Vec::new();
    for o in outcomes {
        let pos = rows.iter().position(|s| s.cell.index == o.cell.index && s.algorithm == o.algorithm);
        let i = match pos {
            Some(i) => i,
            None => {
                rows.push(SummaryRow {
                    cell: o.cell,
                    algorithm: o.algorithm,
                    trials: 0,
                    perfect: 0,
                    failures: 0,
                    mean_k: 0.0,
                });
                k_sums.push(0);
                rows.len() - 1
            }
        };
        rows[i].trials += 1;
        rows[i].perfect += o.perfect as usize;
        rows[i].failures += o.error.is_some() as usize;
        k_sums[i] += o.k_count();
    }
    for (row, k) in rows.iter_mut().zip(k_sums) {
        row.mean_k = k as f64 / row.trials as f64;
    }
    rows
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const TRIALS_HEADER: &str =
    "cell,r,nu,snr_db,trial,seed,algorithm,model,k_count,theta_min,perfect,final_residual,indices,error";
pub const SUMMARY_HEADER: &str = "cell,r,nu,snr_db,algorithm,model,trials,perfect,perfect_pct,mean_k,failures";
pub const TIMINGS_HEADER: &str = "cell,trial,algorithm,model,seconds";

fn trial_line(o: &TrialOutcome) -> String {
    let indices: Vec<String> = o.indices.iter().map(|i| i.to_string()).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        o.cell.index,
        o.cell.r,
        fmt_f64(o.cell.nu),
        opt_f64(o.cell.snr_db),
        o.trial,
        o.seed,
        o.algorithm.algo,
        o.algorithm.model,
        o.k_count(),
        opt_f64(o.theta_min),
        o.perfect as u8,
        opt_f64(o.final_residual),
        indices.join(" "),
        csv_escape(o.error.as_deref().unwrap_or("")),
    )
}

fn summary_line(s: &SummaryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.cell.index,
        s.cell.r,
        fmt_f64(s.cell.nu),
        opt_f64(s.cell.snr_db),
        s.algorithm.algo,
        s.algorithm.model,
        s.trials,
        s.perfect,
        fmt_f64(s.perfect_pct()),
        fmt_f64(s.mean_k),
        s.failures,
    )
}

/// Paths written by [`run_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepFiles {
    pub trials: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
}

/// Runs every cell and trial of `cfg`, writing `trials.csv`, `summary.csv`
/// and `timings.csv` into `cfg.output`. Rows of completed cells are flushed
/// before the next cell starts.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(SweepFiles, Vec<TrialOutcome>)> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output)?;
    let files = SweepFiles {
        trials: cfg.output.join("trials.csv"),
        summary: cfg.output.join("summary.csv"),
        timings: cfg.output.join("timings.csv"),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let mut trials_out = BufWriter::new(File::create(&files.trials)?);
    let mut timings_out = BufWriter::new(File::create(&files.timings)?);
    writeln!(trials_out, "{TRIALS_HEADER}")?;
    writeln!(timings_out, "{TIMINGS_HEADER}")?;

    let mut all = Vec::new();
    for cell in cfg.cells() {
        let per_trial: Vec<Vec<TrialOutcome>> =
            pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &cell, t)).collect());
        for o in per_trial.into_iter().flatten() {
            writeln!(trials_out, "{}", trial_line(&o))?;
            writeln!(
                timings_out,
                "{},{},{},{},{}",
                o.cell.index,
                o.trial,
                o.algorithm.algo,
                o.algorithm.model,
                fmt_f64(o.seconds)
            )?;
            all.push(o);
        }
        trials_out.flush()?;
        timings_out.flush()?;
    }

    let mut summary_out = BufWriter::new(File::create(&files.summary)?);
    writeln!(summary_out, "{SUMMARY_HEADER}")?;
    for s in summarize(&all) {
        writeln!(summary_out, "{}", summary_line(&s))?;
    }
    summary_out.flush()?;
    Ok((files, all))
}

/// Recovery-condition sweep description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionsConfig {
    pub m: usize,
    pub r: Vec<usize>,
    pub draws: usize,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub mode: SplitMode,
    /// Number of random splits per draw; exhaustive when absent.
    #[serde(default)]
    pub sampled_splits: Option<usize>,
    #[serde(default)]
    pub spectra: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverOptions,
    pub master_seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_g() -> f64 {
    2.0
}

impl ConditionsConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if let Some(seed) = seed_override()? {
            cfg.master_seed = seed;
        }
        Ok(cfg)
    }
}

/// Fraction of satisfied splits for one spectra draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRow {
    pub r: usize,
    pub draw: usize,
    pub seed: u64,
    pub splits: usize,
    pub satisfied: usize,
    pub fraction: f64,
}

pub const CONDITIONS_HEADER: &str = "r,draw,seed,splits,satisfied,fraction";
pub const CONDITIONS_SUMMARY_HEADER: &str = "r,draws,mean_fraction,min_fraction,max_fraction";

/// Mean, min and max fraction per `r`, in input order.
pub fn condition_means(rows: &[ConditionRow]) -> Vec<(usize, usize, f64, f64, f64)> {
    let mut out: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|e| e.0 == row.r) {
            Some(e) => {
                e.1 += 1;
                e.2 += row.fraction;
                e.3 = e.3.min(row.fraction);
                e.4 = e.4.max(row.fraction);
            }
            None => out.push((row.r, 1, row.fraction, row.fraction, row.fraction)),
        }
    }
    for e in out.iter_mut() {
        e.2 /= e.1 as f64;
    }
    out
}

/// Evaluates the recovery condition over spectra draws; writes
/// `conditions.csv` and `conditions_summary.csv` into `cfg.output`.
pub fn run_conditions(cfg: &ConditionsConfig) -> Result<Vec<ConditionRow>> {
    if cfg.draws == 0 || cfg.r.is_empty() {
        return Err(Error::InvalidArgument("conditions sweep needs draws >= 1 and a nonempty r grid".into()));
    }
    if let Some(&r) = cfg.r.iter().find(|&&r| r > MAX_EXHAUSTIVE_SOURCES && cfg.sampled_splits.is_none()) {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds {MAX_EXHAUSTIVE_SOURCES}; set sampled_splits")));
    }
    fs::create_dir_all(&cfg.output)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let score = SquaredEuclidean;
    let mut rows = Vec::new();
    for &r in &cfg.r {
        for draw in 0..cfg.draws {
            let seed = derive_seed(cfg.master_seed, draw as u64);
            let w = match &cfg.spectra {
                Some(path) => load_spectra(path, r, seed)?,
                None => gen_spectra(cfg.m, r, seed)?,
            };
            let sweep = pool.install(|| match cfg.sampled_splits {
                Some(k) => split_sweep_sampled(w.as_matrix(), cfg.g, cfg.mode, k, seed, &score, cfg.solver),
                None => split_sweep(w.as_matrix(), cfg.g, cfg.mode, &score, cfg.solver),
            })?;
            rows.push(ConditionRow {
                r,
                draw,
                seed,
                splits: sweep.rows.len(),
                satisfied: sweep.rows.iter().filter(|s| s.holds).count(),
                fraction: sweep.fraction,
            });
        }
    }
    let mut out = BufWriter::new(File::create(cfg.output.join("conditions.csv"))?);
    writeln!(out, "{CONDITIONS_HEADER}")?;
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.r,
            row.draw,
            row.seed,
            row.splits,
            row.satisfied,
            fmt_f64(row.fraction)
        )?;
    }
    out.flush()?;
    let mut out = BufWriter::new(File::create(cfg.output.join("conditions_summary.csv"))?);
    writeln!(out, "{CONDITIONS_SUMMARY_HEADER}")?;
    for (r, draws, mean, lo, hi) in condition_means(&rows) {
        writeln!(out, "{r},{draws},{},{},{}", fmt_f64(mean), fmt_f64(lo), fmt_f64(hi))?;
    }
    out.flush()?;
    Ok(rows)
}

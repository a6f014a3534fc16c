use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lqunmix::bench::{
    run_algorithm, run_conditions, run_sweep, seed_override, Algo, AlgorithmSpec, BfContext, ConditionsConfig,
    ExperimentConfig, RMaxPolicy, RunSettings,
};
use lqunmix::io::read_matrix;
use lqunmix::mixmodel::{DataMatrix, MixingModel, SourceMatrix};
use lqunmix::projector::{SolverOptions, SquaredEuclidean};
use lqunmix::synthdata::{generate, write_bundle, GenConfig};
use lqunmix::theory::{alpha_pi, theory_report, TheoryConfig};

#[derive(Parser)]
#[command(name = "lqunmix", version, about = "Near-separable unmixing of linear-quadratic mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset bundle (X.csv, W.csv, H.csv, meta.json).
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        r: usize,
        #[arg(long, default_value = "lq")]
        model: MixingModel,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        spectra: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Extract source columns from a data CSV; prints JSON.
    Unmix {
        /// Data matrix (bands × pixels).
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        algo: Algo,
        #[arg(long, default_value = "lq")]
        model: MixingModel,
        #[arg(long)]
        r: usize,
        /// Relative residual tolerance for the SNPALQ family.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Maximum extractions for the SNPALQ family (defaults to r).
        #[arg(long)]
        r_max: Option<usize>,
        /// Noise bound used by BF.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Order-4 margin of the sources, needed by BF when eps > 0.
        #[arg(long)]
        alpha4: Option<f64>,
        /// Source matrix from which to compute the order-4 margin.
        #[arg(long)]
        w: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a recovery-condition sweep from a JSON config.
    Conditions {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the theory report of a source matrix as JSON.
    Theory {
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value = "lq")]
        model: MixingModel,
        #[arg(long, default_value_t = 2.0)]
        g: f64,
        /// Also evaluate the recovery condition on every split.
        #[arg(long)]
        splits: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen { out, m, n, r, model, nu, snr, alpha, spectra, seed } => {
            let seed = seed_override()?.unwrap_or(seed);
            let cfg =
                GenConfig { dirichlet_alpha: alpha, spectra, ..GenConfig::new(m, n, r, model, nu, seed) }.with_snr(snr);
            let data = generate(&cfg)?;
            write_bundle(&out, &cfg, &data)?;
            println!(
                "{}",
                serde_json::json!({ "out": out, "true_source_indices": data.true_source_indices, "noise_eps": data.noise_eps })
            );
        }
        Command::Unmix { x, algo, model, r, t, r_max, eps, alpha4, w } => {
            let data = DataMatrix::new(read_matrix(&x)?)?;
            let alpha4 = match (alpha4, w) {
                (Some(a), _) => Some(a),
                (None, Some(path)) if eps > 0.0 => {
                    let w = SourceMatrix::new(read_matrix(&path)?)?;
                    Some(alpha_pi(w.as_matrix(), model, 4, SolverOptions::tight())?)
                }
                _ => None,
            };
            let settings =
                RunSettings { t, r_max: r_max.map_or(RMaxPolicy::R, RMaxPolicy::Fixed), ..RunSettings::default() };
            let spec = AlgorithmSpec { algo, model };
            let run = run_algorithm(&data, &spec, r, &settings, &BfContext { epsilon: eps, alpha4 })?;
            println!(
                "{}",
                serde_json::json!({ "algorithm": algo.as_str(), "model": model, "indices": run.indices, "final_residual": run.final_residual })
            );
        }
        Command::Bench { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (files, _) = run_sweep(&cfg)?;
            println!("{}\n{}\n{}", files.trials.display(), files.summary.display(), files.timings.display());
        }
        Command::Conditions { config } => {
            let cfg = ConditionsConfig::load(&config)?;
            run_conditions(&cfg)?;
            println!("{}", cfg.output.join("conditions.csv").display());
        }
        Command::Theory { w, model, g, splits } => {
            let w = SourceMatrix::new(read_matrix(&w)?)?;
            let cfg = TheoryConfig { g, ..TheoryConfig::default() };
            let report = theory_report(w.as_matrix(), &cfg, model, &SquaredEuclidean, splits)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Runs a Monte-Carlo sweep from a recipe file (or a small built-in one) and
//! prints the summary.
//!
//! `cargo run --release --example monte_carlo -- recipes/noiseless_bilinear.json`

use std::path::PathBuf;

use lqunmix::bench::{run_sweep, summarize, Algo, AlgorithmSpec, ExperimentConfig, RMaxPolicy, RunSettings};
use lqunmix::mixmodel::MixingModel;

fn builtin() -> ExperimentConfig {
    ExperimentConfig {
        name: "demo".into(),
        m: 20,
        n: 300,
        r: vec![3, 5],
        nu: vec![0.5],
        snr_db: vec![None],
        model: MixingModel::Bilinear,
        dirichlet_alpha: 0.5,
        spectra: None,
        trials: 5,
        algorithms: vec![
            AlgorithmSpec { algo: Algo::SnpalqBf, model: MixingModel::Bilinear },
            AlgorithmSpec { algo: Algo::Snpa, model: MixingModel::Linear },
        ],
        settings: RunSettings { t: 1e-6, r_max: RMaxPolicy::N, ..RunSettings::default() },
        master_seed: 1,
        output: std::env::temp_dir().join("lqunmix_demo"),
        workers: None,
    }
}

fn main() -> lqunmix::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(&PathBuf::from(path))?,
        None => builtin(),
    };
    let (files, outcomes) = run_sweep(&cfg)?;
    for row in summarize(&outcomes) {
        println!(
            "r={:>2} nu={:.2} snr={:>6} {:>10} ({:>8}): {:>5.1}% perfect, mean |K| {:.2}",
            row.cell.r,
            row.cell.nu,
            row.cell.snr_db.map_or("inf".to_string(), |s| format!("{s}")),
            row.algorithm.algo,
            row.algorithm.model,
            row.perfect_pct(),
            row.mean_k
        );
    }
    println!("rows in {}", files.trials.display());
    Ok(())
}

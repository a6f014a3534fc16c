//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! The Monte-Carlo checks are heavy; run with `--nocapture` to see the lines
//! and `--test-threads 1` to keep them in order.

mod common;

use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use common::{exhaustive_generators, grid_refine, rng, uniform_matrix, Bumpy};
use lqunmix::bench::{
    condition_means, run_conditions, run_sweep, summarize, Algo, AlgorithmSpec, ConditionsConfig, ExperimentConfig,
    RMaxPolicy, RunSettings, SummaryRow,
};
use lqunmix::bruteforce::{bf, RobustLonerParams};
use lqunmix::extractors::{snpa, snpalq, ExtractionConfig};
use lqunmix::mixmodel::{extend, DataMatrix, MixingModel};
use lqunmix::projector::{hull_project, ScoreFunction, SolverOptions, SquaredEuclidean};
use lqunmix::synthdata::{derive_seed, generate, GenConfig};
use lqunmix::theory::{alpha_margin, alpha_pi, SplitMode};
use nalgebra::DMatrix;
use rand::Rng;

const MASTER_SEED: u64 = 2024;
const TRIALS: usize = 20;
const NOISY_TRIALS: usize = 10;
const SWEEP_BUDGET_SECS: f64 = 15.0 * 60.0;
const SNPALQ_MIN_PCT: f64 = 80.0;
const MEAN_K_SLACK: f64 = 0.3;
const COUNTEREXAMPLE_T: f64 = 1e-9;
const COUNTEREXAMPLE_RESIDUAL: f64 = 1e-7;
const ALPHA_ZERO: f64 = 1e-9;
const BF_INSTANCES: usize = 50;
const ALPHA4_MIN: f64 = 1e-3;
const PROJECTOR_INSTANCES: usize = 200;
const PROJECTOR_TOL: f64 = 1e-6;
const NONEXPANSIVE_SAMPLES: usize = 1000;
const FD_STEP: f64 = 1e-6;
const FD_REL: f64 = 1e-5;
const CONDITION_DRAWS: usize = 20;
const CONDITION_MAX_AT_10: f64 = 0.15;

fn report(id: usize, ok: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

fn spec(algo: Algo, model: MixingModel) -> AlgorithmSpec {
    AlgorithmSpec { algo, model }
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    dir: &Path,
    m: usize,
    r: Vec<usize>,
    nu: f64,
    snr: Option<f64>,
    model: MixingModel,
    trials: usize,
    algorithms: Vec<AlgorithmSpec>,
    r_max: RMaxPolicy,
) -> ExperimentConfig {
    ExperimentConfig {
        name: String::new(),
        m,
        n: 1000,
        r,
        nu: vec![nu],
        snr_db: vec![snr],
        model,
        dirichlet_alpha: 0.5,
        spectra: None,
        trials,
        algorithms,
        settings: RunSettings { t: 1e-6, r_max, ..RunSettings::default() },
        master_seed: MASTER_SEED,
        output: dir.to_path_buf(),
        workers: None,
    }
}

fn row(rows: &[SummaryRow], r: usize, s: AlgorithmSpec) -> &SummaryRow {
    rows.iter().find(|x| x.cell.r == r && x.algorithm == s).expect("summary row")
}

const BIL_SNPALQ: AlgorithmSpec = AlgorithmSpec { algo: Algo::Snpalq, model: MixingModel::Bilinear };
const BIL_BF: AlgorithmSpec = AlgorithmSpec { algo: Algo::SnpalqBf, model: MixingModel::Bilinear };
const LQ_BF: AlgorithmSpec = AlgorithmSpec { algo: Algo::SnpalqBf, model: MixingModel::Lq };
const SNPA: AlgorithmSpec = AlgorithmSpec { algo: Algo::Snpa, model: MixingModel::Linear };
const SPA: AlgorithmSpec = AlgorithmSpec { algo: Algo::Spa, model: MixingModel::Linear };
const R_GRID: [usize; 6] = [2, 3, 4, 6, 8, 10];

/// The noiseless bilinear sweep shared by criteria 1 and 2.
fn bilinear_sweep() -> &'static (Vec<SummaryRow>, f64) {
    static SWEEP: OnceLock<(Vec<SummaryRow>, f64)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = experiment(
            dir.path(),
            20,
            R_GRID.to_vec(),
            0.5,
            None,
            MixingModel::Bilinear,
            TRIALS,
            vec![BIL_SNPALQ, BIL_BF, SNPA, SPA],
            RMaxPolicy::N,
        );
        let t0 = Instant::now();
        let (_, outcomes) = run_sweep(&cfg).unwrap();
        (summarize(&outcomes), t0.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_noiseless_bilinear_separation() {
    let (rows, secs) = bilinear_sweep();
    let mut ok = *secs <= SWEEP_BUDGET_SECS;
    let mut detail = Vec::new();
    for r in R_GRID {
        let [a, b, c, d] = [BIL_SNPALQ, BIL_BF, SNPA, SPA].map(|s| row(rows, r, s).perfect_pct());
        ok &= b == 100.0;
        if r >= 4 {
            ok &= a >= SNPALQ_MIN_PCT;
        }
        if r >= 6 {
            ok &= c < a && d < a;
        }
        detail.push(format!("r={r}: snpalq {a}% +bf {b}% snpa {c}% spa {d}%"));
    }
    report(1, ok, format!("[{}] in {secs:.0}s", detail.join("; ")));
}

#[test]
fn criterion_2_extracted_counts() {
    let (rows, _) = bilinear_sweep();
    let mut ok = true;
    let mut detail = Vec::new();
    for r in R_GRID {
        let k = row(rows, r, BIL_SNPALQ).mean_k;
        let kb = row(rows, r, BIL_BF).mean_k;
        ok &= k <= r as f64 + MEAN_K_SLACK && kb == r as f64;
        if r >= 6 {
            ok &= k == r as f64;
        }
        detail.push(format!("r={r}: {k} / {kb}"));
    }
    report(2, ok, format!("mean |K| snpalq / snpalq+bf [{}]", detail.join("; ")));
}

#[test]
fn criterion_3_product_source_counterexample() {
    let w = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mut g = rng(3);
    let mut cols: Vec<Vec<f64>> = (0..3).map(|j| w.column(j).iter().copied().collect()).collect();
    for _ in 0..12 {
        let raw: Vec<f64> = (0..3).map(|_| g.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum::<f64>() / g.random_range(0.5..0.95);
        cols.push((0..3).map(|i| (0..3).map(|j| w[(i, j)] * raw[j] / total).sum()).collect());
    }
    let x = DataMatrix::new(DMatrix::from_fn(3, cols.len(), |i, j| cols[j][i])).unwrap();
    let n = x.as_matrix().ncols();

    let lq = snpalq(&x, &ExtractionConfig::new(n, MixingModel::Lq).with_tolerance(COUNTEREXAMPLE_T), &SquaredEuclidean)
        .unwrap();
    let lin =
        snpa(&x, &ExtractionConfig::new(n, MixingModel::Linear).with_tolerance(COUNTEREXAMPLE_T), &SquaredEuclidean)
            .unwrap();
    let residual = lq.final_relative_residual().unwrap();
    let alpha = alpha_margin(&w, &extend(&w, MixingModel::Lq, 2).unwrap(), SolverOptions::tight()).unwrap();
    let ok = lq.indices.len() == 2
        && residual <= COUNTEREXAMPLE_RESIDUAL
        && lin.indices.len() == 3
        && lin.indices.contains(&2)
        && alpha <= ALPHA_ZERO;
    report(
        3,
        ok,
        format!(
            "snpalq picks {:?} (residual {residual:.1e}), snpa picks {:?}, margin {alpha:.1e}",
            lq.indices, lin.indices
        ),
    );
}

#[test]
fn criterion_4_noiseless_bf_is_exact() {
    let mut accepted = 0;
    let mut skipped = 0;
    let mut bad = Vec::new();
    let mut i = 0u64;
    while accepted < BF_INSTANCES {
        let seed = derive_seed(MASTER_SEED, i);
        let r = 1 + (i % 3) as usize;
        let m = 4 + (i % 7) as usize;
        let n = 8 + (i % 23) as usize;
        i += 1;
        let data = generate(&GenConfig::new(m, n, r, MixingModel::Lq, 0.5, seed)).unwrap();
        if alpha_pi(data.w.as_matrix(), MixingModel::Lq, 4, SolverOptions::tight()).unwrap() <= ALPHA4_MIN {
            skipped += 1;
            continue;
        }
        accepted += 1;
        let mut truth = data.true_source_indices.clone();
        truth.sort_unstable();
        let got =
            bf(&data.x, &RobustLonerParams::noiseless(), &SquaredEuclidean, MixingModel::Lq, SolverOptions::default())
                .unwrap();
        let oracle = exhaustive_generators(&data.x, MixingModel::Lq, r);
        if got != truth || oracle != vec![truth.clone()] {
            bad.push(format!("seed {seed} (m={m}, n={n}, r={r}): bf {got:?} oracle {oracle:?} truth {truth:?}"));
        }
    }
    report(4, bad.is_empty(), format!("{accepted} instances ({skipped} skipped for small margin) {bad:?}"));
}

#[test]
fn criterion_5_projector() {
    let mut g = rng(5);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..PROJECTOR_INSTANCES {
        let m = g.random_range(1..=6);
        let k = g.random_range(1..=3);
        let a = uniform_matrix(&mut g, m, k, 0.0, 1.0);
        let x: Vec<f64> = (0..m).map(|_| g.random_range(-0.5..1.5)).collect();
        let oracle = grid_refine(&x, &a, &SquaredEuclidean).0;
        let got = hull_project(&x, &a, &SquaredEuclidean, SolverOptions::default()).unwrap().score;
        worst_gap = worst_gap.max((got - oracle).abs());
    }

    let scores: [&dyn ScoreFunction; 2] = [&SquaredEuclidean, &Bumpy];
    let mut worst_ratio: f64 = 0.0;
    for s in 0..NONEXPANSIVE_SAMPLES {
        let score = scores[s % 2];
        let m = g.random_range(1..=8);
        let k = g.random_range(1..=10);
        let a = uniform_matrix(&mut g, m, k, 0.0, 1.0);
        let x: Vec<f64> = (0..m).map(|_| g.random_range(-1.0..2.0)).collect();
        let p = hull_project(&x, &a, score, SolverOptions::tight()).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            worst_ratio = worst_ratio.max(p.residual_norm() / ((score.lipschitz() / score.mu()).sqrt() * norm));
        }
    }

    let mut worst_fd: f64 = 0.0;
    for s in 0..200 {
        let score = scores[s % 2];
        let v: Vec<f64> = (0..6).map(|_| g.random_range(-2.0..2.0)).collect();
        let mut grad = vec![0.0; v.len()];
        score.gradient(&v, &mut grad);
        for i in 0..v.len() {
            let (mut up, mut down) = (v.clone(), v.clone());
            up[i] += FD_STEP;
            down[i] -= FD_STEP;
            let fd = (score.evaluate(&up) - score.evaluate(&down)) / (2.0 * FD_STEP);
            worst_fd = worst_fd.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    let ok = worst_gap <= PROJECTOR_TOL && worst_ratio <= 1.0 + 1e-12 && worst_fd <= FD_REL;
    report(
        5,
        ok,
        format!("oracle gap {worst_gap:.1e}, residual/bound {worst_ratio:.4}, gradient error {worst_fd:.1e}"),
    );
}

#[test]
fn criterion_6_condition_sweep_trend() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ConditionsConfig {
        m: 50,
        r: (3..=10).collect(),
        draws: CONDITION_DRAWS,
        g: 2.0,
        mode: SplitMode::All,
        sampled_splits: None,
        spectra: None,
        solver: SolverOptions::default(),
        master_seed: MASTER_SEED,
        output: dir.path().to_path_buf(),
        workers: None,
    };
    let means: Vec<(usize, f64)> =
        condition_means(&run_conditions(&cfg).unwrap()).into_iter().map(|(r, _, mean, _, _)| (r, mean)).collect();
    let monotone = means.windows(2).all(|w| w[1].1 <= w[0].1);
    let last = means.last().unwrap().1;
    let detail: Vec<String> = means.iter().map(|(r, f)| format!("r={r}: {f:.4}")).collect();
    report(6, monotone && last <= CONDITION_MAX_AT_10, format!("mean satisfied fraction [{}]", detail.join("; ")));
}

fn noisy_corner(snr: f64, nu: f64) -> (f64, f64) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(
        dir.path(),
        50,
        vec![10],
        nu,
        Some(snr),
        MixingModel::Bilinear,
        NOISY_TRIALS,
        vec![BIL_BF, SNPA],
        RMaxPolicy::R,
    );
    let rows = summarize(&run_sweep(&cfg).unwrap().1);
    (row(&rows, 10, BIL_BF).perfect_pct(), row(&rows, 10, SNPA).perfect_pct())
}

#[test]
fn criterion_7_noisy_corners() {
    let (bf_hi, snpa_hi) = noisy_corner(50.0, 0.5);
    let (bf_lo, snpa_lo) = noisy_corner(25.0, 0.05);
    report(
        7,
        bf_hi >= snpa_hi && snpa_lo >= bf_lo,
        format!("50 dB, nu 0.5: snpalq+bf {bf_hi}% vs snpa {snpa_hi}%; 25 dB, nu 0.05: snpalq+bf {bf_lo}% vs snpa {snpa_lo}%"),
    );
}

#[test]
fn criterion_8_lq_data_prefers_the_lq_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiment(
        dir.path(),
        20,
        vec![4, 8],
        0.5,
        None,
        MixingModel::Lq,
        TRIALS,
        vec![LQ_BF, BIL_BF, SNPA],
        RMaxPolicy::R,
    );
    let rows = summarize(&run_sweep(&cfg).unwrap().1);
    let mut ok = true;
    let mut detail = Vec::new();
    for r in [4, 8] {
        let [lq, bil, lin] = [LQ_BF, BIL_BF, SNPA].map(|s| row(&rows, r, s).perfect_pct());
        ok &= lq >= bil && bil > lin;
        detail.push(format!("r={r}: lq {lq}% bilinear {bil}% snpa {lin}%"));
    }
    report(8, ok, format!("[{}]", detail.join("; ")));
}

#[test]
fn criterion_9_trials_file_is_reproducible() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let run = |dir: &Path, workers: usize| {
        let mut cfg = experiment(
            dir,
            15,
            vec![2, 3],
            0.3,
            Some(35.0),
            MixingModel::Lq,
            4,
            vec![spec(Algo::Snpalq, MixingModel::Lq), LQ_BF, BIL_BF, SNPA, SPA],
            RMaxPolicy::R,
        );
        cfg.n = 200;
        cfg.workers = Some(workers);
        run_sweep(&cfg).unwrap();
        std::fs::read(dir.join("trials.csv")).unwrap()
    };
    let a = run(dirs[0].path(), 1);
    let b = run(dirs[1].path(), 1);
    let c = run(dirs[2].path(), 4);
    report(9, a == b && a == c, format!("{} bytes, workers 1, 1 and 4", a.len()));
}

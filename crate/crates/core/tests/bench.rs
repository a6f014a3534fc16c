use std::collections::HashMap;
use std::fs;
use std::path::Path;

use lqunmix::bench::{run_sweep, Algo, AlgorithmSpec, ExperimentConfig, RMaxPolicy, RunSettings};
use lqunmix::io::{parse_matrix, write_matrix_to};
use lqunmix::mixmodel::{extend, MixingModel};
use lqunmix::synthdata::{generate, read_bundle, write_bundle, GenConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sweep(dir: &Path, workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: "small".into(),
        m: 12,
        n: 40,
        r: vec![2, 3],
        nu: vec![0.5],
        snr_db: vec![None, Some(40.0)],
        model: MixingModel::Bilinear,
        dirichlet_alpha: 0.5,
        spectra: None,
        trials: 3,
        algorithms: vec![
            AlgorithmSpec { algo: Algo::Snpalq, model: MixingModel::Bilinear },
            AlgorithmSpec { algo: Algo::SnpalqBf, model: MixingModel::Bilinear },
            AlgorithmSpec { algo: Algo::Bf, model: MixingModel::Lq },
            AlgorithmSpec { algo: Algo::Snpa, model: MixingModel::Linear },
            AlgorithmSpec { algo: Algo::Spa, model: MixingModel::Linear },
        ],
        settings: RunSettings { t: 1e-6, r_max: RMaxPolicy::N, ..RunSettings::default() },
        master_seed: 5,
        output: dir.to_path_buf(),
        workers: Some(workers),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_csv_round_trip(m in 1usize..6, n in 1usize..6, vals in prop::collection::vec(-1e6f64..1e6, 36), tiny in -1e-300f64..1e-300) {
        let mut a = DMatrix::from_fn(m, n, |i, j| vals[i * 6 + j]);
        a[(0, 0)] = tiny;
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &a).unwrap();
        let back = parse_matrix(&buf[..], Path::new("mem")).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn generated_data_follows_the_model(seed in any::<u64>(), r in 1usize..=4, nu in 0.0f64..1.0) {
        for model in [MixingModel::Linear, MixingModel::Bilinear, MixingModel::Lq] {
            let d = generate(&GenConfig::new(9, 25, r, model, nu, seed)).unwrap();
            let h = d.h.as_matrix();
            prop_assert_eq!(h.nrows(), model.extended_rank(r));
            prop_assert!(h.iter().all(|&v| v >= 0.0));
            prop_assert!(h.column_iter().all(|c| c.sum() <= 1.0 + 1e-12));
            let pi = extend(d.w.as_matrix(), model, 2).unwrap();
            let expected = (pi.matrix() * h).map(|v| v.max(0.0));
            prop_assert!((&expected - d.x.as_matrix()).amax() <= 1e-12);
            for (i, &j) in d.true_source_indices.iter().enumerate() {
                prop_assert!((d.x.as_matrix().column(j) - d.w.as_matrix().column(i)).amax() <= 1e-15);
            }
            prop_assert_eq!(d.noise_eps, 0.0);
        }
    }
}

#[test]
fn bundle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GenConfig::new(10, 20, 3, MixingModel::Lq, 0.3, 9).with_snr(Some(30.0));
    let data = generate(&cfg).unwrap();
    write_bundle(dir.path(), &cfg, &data).unwrap();
    let (cfg2, data2) = read_bundle(dir.path()).unwrap();
    assert_eq!(cfg2, cfg);
    assert_eq!(data2.x, data.x);
    assert_eq!(data2.w, data.w);
    assert_eq!(data2.true_source_indices, data.true_source_indices);
    assert_eq!(data2.noise_eps, data.noise_eps);
}

#[test]
fn summary_agrees_with_trials_and_runs_are_reproducible() {
    let (one, two) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (files, outcomes) = run_sweep(&sweep(one.path(), 1)).unwrap();
    run_sweep(&sweep(two.path(), 3)).unwrap();
    let trials = fs::read(&files.trials).unwrap();
    assert_eq!(trials, fs::read(two.path().join("trials.csv")).unwrap());
    assert_eq!(fs::read(&files.summary).unwrap(), fs::read(two.path().join("summary.csv")).unwrap());
    assert_eq!(outcomes.len(), 4 * 3 * 5);
    assert!(outcomes.iter().all(|o| o.error.is_none()), "{:?}", outcomes.iter().find(|o| o.error.is_some()));

    // Recompute the summary from the trial rows alone.
    let mut agg: HashMap<(String, String, String), (usize, usize, usize)> = HashMap::new();
    let mut rdr = csv::Reader::from_reader(&trials[..]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let e = agg.entry((rec[0].to_string(), rec[6].to_string(), rec[7].to_string())).or_default();
        e.0 += 1;
        e.1 += rec[10].parse::<usize>().unwrap();
        e.2 += rec[8].parse::<usize>().unwrap();
    }
    let mut rows = 0;
    for rec in csv::Reader::from_path(&files.summary).unwrap().records() {
        let rec = rec.unwrap();
        let (n, perfect, k) = agg[&(rec[0].to_string(), rec[4].to_string(), rec[5].to_string())];
        assert_eq!(rec[6].parse::<usize>().unwrap(), n);
        assert_eq!(rec[7].parse::<usize>().unwrap(), perfect);
        assert!((rec[9].parse::<f64>().unwrap() - k as f64 / n as f64).abs() <= 1e-12);
        rows += 1;
    }
    assert_eq!(rows, agg.len());
}

#[test]
fn config_json_accepts_every_r_max_form() {
    let base = r#"{"m": 20, "n": 100, "r": [3], "nu": [0.5], "model": "bilinear", "trials": 2,
        "algorithms": [{"algo": "snpalq+bf", "model": "lq"}, {"algo": "spa"}],
        "master_seed": 1, "output": "out", "settings": {"t": 1e-6, "r_max": R}}"#;
    for (text, want) in [("\"r\"", RMaxPolicy::R), ("\"n\"", RMaxPolicy::N), ("7", RMaxPolicy::Fixed(7))] {
        let cfg: ExperimentConfig = serde_json::from_str(&base.replace('R', text)).unwrap();
        assert_eq!(cfg.settings.r_max, want);
        assert_eq!(cfg.snr_db, vec![None]);
    }
    assert!(serde_json::from_str::<ExperimentConfig>(&base.replace('R', "0")).is_err());
    assert!(serde_json::from_str::<ExperimentConfig>(&base.replace('R', "\"all\"")).is_err());
}

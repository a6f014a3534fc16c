//! Robust-loner detection: standalone BF and BF as a filter on SNPALQ output.

use lqunmix::bruteforce::{bf, compute_d, loner_verdicts, postprocess, RobustLonerParams, ThresholdForm};
use lqunmix::extractors::{snpalq, ExtractionConfig};
use lqunmix::mixmodel::MixingModel;
use lqunmix::projector::{SolverOptions, SquaredEuclidean};
use lqunmix::synthdata::{generate, GenConfig};
use lqunmix::theory::alpha_pi;

fn main() -> lqunmix::Result<()> {
    let opts = SolverOptions::default();
    let data = generate(&GenConfig::new(10, 40, 3, MixingModel::Lq, 0.5, 21))?;
    let mut truth = data.true_source_indices.clone();
    truth.sort_unstable();

    let params = RobustLonerParams::noiseless();
    println!("truth {truth:?}, bf {:?}", bf(&data.x, &params, &SquaredEuclidean, MixingModel::Lq, opts)?);
    for v in loner_verdicts(&data.x, &params, &SquaredEuclidean, MixingModel::Lq, opts)?.iter().filter(|v| v.is_loner) {
        println!("  column {} is a loner, score {:.3e}", v.index, v.score);
    }

    // Let SNPALQ over-extract, then filter.
    let cfg = ExtractionConfig::new(8, MixingModel::Lq);
    let greedy = snpalq(&data.x, &cfg, &SquaredEuclidean)?;
    let kept = postprocess(&data.x, &greedy.indices, &params, &SquaredEuclidean, MixingModel::Lq, opts)?;
    println!("snpalq {:?} -> bf {kept:?}", greedy.indices);

    // Thresholds for a noisy setting.
    let a4 = alpha_pi(data.w.as_matrix(), MixingModel::Lq, 4, SolverOptions::tight())?;
    let noisy = compute_d(1e-3, &data.x, &SquaredEuclidean, a4, ThresholdForm::General)?;
    println!(
        "eps 1e-3: d = {:.3e}, loner threshold {:.3e}, cluster radius {:.3e}",
        noisy.d, noisy.loner_rhs, noisy.cluster_radius
    );
    Ok(())
}

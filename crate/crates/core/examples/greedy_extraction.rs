//! SNPALQ against the linear baselines on noiseless bilinear data.

use lqunmix::extractors::{snpa, snpalq, spa, ExtractionConfig};
use lqunmix::metrics::match_sources;
use lqunmix::mixmodel::MixingModel;
use lqunmix::projector::SquaredEuclidean;
use lqunmix::synthdata::{generate, GenConfig};

fn main() -> lqunmix::Result<()> {
    let r = 6;
    let data = generate(&GenConfig::new(20, 1000, r, MixingModel::Bilinear, 0.5, 3))?;
    let (w, x) = (data.w.as_matrix(), data.x.as_matrix());
    let mut truth = data.true_source_indices.clone();
    truth.sort_unstable();
    println!("true sources: {truth:?}");

    let lq = snpalq(&data.x, &ExtractionConfig::new(r, MixingModel::Bilinear), &SquaredEuclidean)?;
    let lin = snpa(&data.x, &ExtractionConfig::new(r, MixingModel::Linear), &SquaredEuclidean)?;
    let spa_idx = spa(&data.x, r)?;

    for (name, idx) in [("snpalq", &lq.indices), ("snpa", &lin.indices), ("spa", &spa_idx)] {
        let m = match_sources(w, x, idx)?;
        println!("{name:>7}: {idx:?} worst similarity {:.5} perfect {}", m.theta_min, m.perfect);
    }
    let steps: Vec<String> = lq.residual_history.iter().map(|v| format!("{v:.2e}")).collect();
    println!("snpalq relative residual per step: {}", steps.join(" "));
    Ok(())
}

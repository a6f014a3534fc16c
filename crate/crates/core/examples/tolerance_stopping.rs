//! Lets the residual tolerance decide how many columns to extract.

use lqunmix::extractors::{snpalq, ExtractionConfig};
use lqunmix::mixmodel::MixingModel;
use lqunmix::projector::SquaredEuclidean;
use lqunmix::synthdata::{generate, GenConfig};

fn main() -> lqunmix::Result<()> {
    let data = generate(&GenConfig::new(20, 400, 4, MixingModel::Lq, 0.5, 8))?;
    let n = data.x.as_matrix().ncols();
    for t in [1e-1, 1e-3, 1e-6] {
        let cfg = ExtractionConfig::new(n, MixingModel::Lq).with_tolerance(t);
        let res = snpalq(&data.x, &cfg, &SquaredEuclidean)?;
        println!("t = {t:.0e}: {} columns {:?}", res.indices.len(), res.indices);
    }
    Ok(())
}

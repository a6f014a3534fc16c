//! A source that equals the product of two others is invisible to SNPALQ but
//! picked up by SNPA.

use lqunmix::extractors::{snpa, snpalq, ExtractionConfig};
use lqunmix::mixmodel::{extend, DataMatrix, MixingModel};
use lqunmix::projector::{SolverOptions, SquaredEuclidean};
use lqunmix::theory::alpha_margin;
use nalgebra::DMatrix;

fn main() -> lqunmix::Result<()> {
    // w3 = w1 ⊙ w2.
    let w = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mixes = [[0.3, 0.3, 0.3], [0.5, 0.2, 0.1], [0.1, 0.6, 0.2], [0.2, 0.1, 0.6]];
    let mut x = w.clone().resize_horizontally(3 + mixes.len(), 0.0);
    for (j, h) in mixes.iter().enumerate() {
        let col = &w * nalgebra::Vector3::from_column_slice(h);
        x.set_column(3 + j, &col);
    }
    let data = DataMatrix::new(x)?;
    let n = data.as_matrix().ncols();

    let lq = snpalq(&data, &ExtractionConfig::new(n, MixingModel::Lq).with_tolerance(1e-9), &SquaredEuclidean)?;
    let lin = snpa(&data, &ExtractionConfig::new(n, MixingModel::Linear).with_tolerance(1e-9), &SquaredEuclidean)?;
    println!("snpalq extracts {:?}", lq.indices);
    println!("snpa extracts {:?}", lin.indices);

    let margin = alpha_margin(&w, &extend(&w, MixingModel::Lq, 2)?, SolverOptions::tight())?;
    println!("order-2 margin of W: {margin:.2e}");
    Ok(())
}

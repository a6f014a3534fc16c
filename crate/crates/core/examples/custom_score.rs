//! Plugging a non-quadratic score into the projector and the extractor.

use lqunmix::extractors::{snpalq, ExtractionConfig};
use lqunmix::mixmodel::MixingModel;
use lqunmix::projector::{hull_project, ScoreFunction, SolverOptions, SquaredEuclidean};
use lqunmix::synthdata::{generate, GenConfig};

/// Squared norm plus a Huber-like term; `μ = 2`, `L = 3`.
struct Smoothed;

impl ScoreFunction for Smoothed {
    fn evaluate(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x + ((1.0 + x * x).sqrt() - 1.0)).sum()
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = 2.0 * x + x / (1.0 + x * x).sqrt();
        }
    }

    fn mu(&self) -> f64 {
        2.0
    }

    fn lipschitz(&self) -> f64 {
        3.0
    }
}

fn main() -> lqunmix::Result<()> {
    let data = generate(&GenConfig::new(12, 150, 3, MixingModel::Bilinear, 0.4, 4))?;
    let a = data.w.as_matrix();
    let x = data.x.as_matrix().column(0);
    let p = hull_project(x.as_slice(), a, &Smoothed, SolverOptions::tight())?;
    println!("smoothed score {:.3e} after {} iterations", p.score, p.iterations);

    let cfg = ExtractionConfig::new(3, MixingModel::Bilinear);
    let a = snpalq(&data.x, &cfg, &Smoothed)?;
    let b = snpalq(&data.x, &cfg, &SquaredEuclidean)?;
    println!("smoothed picks {:?}, squared picks {:?}, truth {:?}", a.indices, b.indices, data.true_source_indices);
    Ok(())
}

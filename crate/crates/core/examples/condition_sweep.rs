//! Share of source splits satisfying the recovery condition, per number of
//! sources, on the bundled sample spectra.

use std::path::Path;

use lqunmix::projector::{SolverOptions, SquaredEuclidean};
use lqunmix::synthdata::{derive_seed, load_spectra};
use lqunmix::theory::{split_sweep, SplitMode};

fn main() -> lqunmix::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_spectra.csv");
    for r in 3..=7 {
        let mut total = 0.0;
        let draws = 10;
        for d in 0..draws {
            let w = load_spectra(&path, r, derive_seed(1, d))?;
            total +=
                split_sweep(w.as_matrix(), 2.0, SplitMode::All, &SquaredEuclidean, SolverOptions::default())?.fraction;
        }
        println!("r = {r}: {:.3}", total / draws as f64);
    }
    Ok(())
}

//! Scores an extraction against known sources.

use lqunmix::metrics::{bottleneck_assignment, match_sources, sad};
use nalgebra::DMatrix;

fn main() -> lqunmix::Result<()> {
    // x holds a near copy of w2, a mixture and a near copy of w1.
    let w = DMatrix::from_column_slice(3, 2, &[1.0, 0.5, 0.0, 0.0, 0.5, 1.0]);
    let x = DMatrix::from_column_slice(3, 3, &[0.01, 0.5, 0.99, 0.5, 0.5, 0.5, 0.98, 0.52, 0.0]);

    println!("similarity of w1 and x3: {:.4}", sad(w.column(0).as_slice(), x.column(2).as_slice())?);
    let report = match_sources(&w, &x, &[0, 2])?;
    println!("pairs {:?}, similarities {:.4?}, perfect {}", report.pairs, report.sad, report.perfect);

    let sim = DMatrix::from_row_slice(2, 3, &[0.9, 0.8, 0.1, 0.85, 0.2, 0.7]);
    println!("bottleneck {:?}", bottleneck_assignment(&sim));
    Ok(())
}

//! Projects a point onto the hull of a dictionary and the origin with both
//! solvers.

use lqunmix::projector::{hull_project, project_delta, SolverMethod, SolverOptions, SquaredEuclidean};
use nalgebra::DMatrix;

fn main() -> lqunmix::Result<()> {
    let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.3, 0.0, 1.0, 0.3, 0.0, 0.0, 0.6]);
    let x = [0.8, 0.7, 0.1];

    for method in [SolverMethod::ActiveSet, SolverMethod::Accelerated] {
        let p = hull_project(&x, &a, &SquaredEuclidean, SolverOptions { method, ..SolverOptions::tight() })?;
        println!(
            "{method:?}: h = {:?}, score = {:.6e}, {} iterations",
            p.coefficients.as_slice(),
            p.score,
            p.iterations
        );
    }

    // The coefficient set itself: Euclidean projection onto {h >= 0, sum h <= 1}.
    println!("project_delta([0.9, 0.6, -0.2]) = {:?}", project_delta(&[0.9, 0.6, -0.2]));
    Ok(())
}

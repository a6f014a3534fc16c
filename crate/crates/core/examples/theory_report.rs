//! Margins, residual gaps and admissible noise levels of a set of sources.

use lqunmix::mixmodel::MixingModel;
use lqunmix::projector::SquaredEuclidean;
use lqunmix::synthdata::gen_spectra;
use lqunmix::theory::{theory_report, TheoryConfig};

fn main() -> lqunmix::Result<()> {
    let w = gen_spectra(40, 4, 5)?;
    let report = theory_report(w.as_matrix(), &TheoryConfig::default(), MixingModel::Lq, &SquaredEuclidean, true)?;
    println!("alpha_W {:.4}  alpha_2 {:.4}  alpha_4 {:.4}", report.alpha_w, report.alpha_pi2, report.alpha_pi4);
    println!(
        "nu {:.4}  gamma {:.4}  beta_lin {:.4}  beta_lq {:.4}",
        report.nu, report.gamma, report.beta_lin, report.beta_lq
    );
    println!(
        "admissible noise: linear {:.3e}  lq {:.3e}  bf {:.3e}",
        report.eps_bound_lin, report.eps_bound_lq, report.eps_bound_bf
    );
    if let Some(f) = report.split_fraction {
        println!("recovery condition holds on {:.1}% of {} splits", 100.0 * f, report.splits.len());
    }
    Ok(())
}

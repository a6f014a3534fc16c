//! Generates a noisy LQ dataset and writes it as a bundle directory.
//!
//! `cargo run --example generate_dataset -- /tmp/lq_bundle`

use std::path::PathBuf;

use lqunmix::mixmodel::MixingModel;
use lqunmix::synthdata::{generate, read_bundle, write_bundle, GenConfig};

fn main() -> lqunmix::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lq_bundle"));
    let cfg = GenConfig::new(30, 500, 4, MixingModel::Lq, 0.4, 11).with_snr(Some(40.0));
    let data = generate(&cfg)?;

    println!("X is {} x {}", data.x.as_matrix().nrows(), data.x.as_matrix().ncols());
    println!("sources sit at columns {:?}", data.true_source_indices);
    println!("noise bound {:.3e}, realised SNR {:.2} dB", data.noise_eps, data.snr_realized.unwrap());

    write_bundle(&dir, &cfg, &data)?;
    let (_, back) = read_bundle(&dir)?;
    assert_eq!(back.x, data.x);
    println!("bundle written to {}", dir.display());
    Ok(())
}

//! Synthetic near-separable LQ data.
//!
//! A dataset is `X̄ = [Π₂(W) H + N]₊` where `H = [[I_r; 0], H′] P`: every
//! source appears once as a pure column, the remaining columns are Dirichlet
//! mixtures of the extended sources whose primary part is scaled by `1 − ν`
//! and product part by `ν` before ℓ₁ normalization, `P` is a random column
//! permutation and `N` is i.i.d. Gaussian noise at a prescribed SNR.
//!
//! All randomness comes from [`ChaCha8Rng`] streams seeded through
//! [`derive_seed`], so a given configuration yields the same data on every
//! platform.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_matrix, write_matrix};
use crate::mixmodel::{extend, CoefficientMatrix, DataMatrix, MixingModel, SourceMatrix};

/// Lowest accepted SNR in dB.
pub const MIN_SNR_DB: f64 = -50.0;

const MAX_SPECTRA_RETRIES: usize = 100;
const MAX_COSINE: f64 = 0.999;

/// Generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub model: MixingModel,
    /// Share of the product part in mixed columns, in `[0, 1]`.
    pub nu: f64,
    #[serde(default = "default_alpha")]
    pub dirichlet_alpha: f64,
    /// `None` for noiseless data.
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Spectra CSV to draw sources from; synthetic curves when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<PathBuf>,
}

fn default_alpha() -> f64 {
    0.5
}

impl GenConfig {
    pub fn new(m: usize, n: usize, r: usize, model: MixingModel, nu: f64, seed: u64) -> Self {
        Self { m, n, r, model, nu, dirichlet_alpha: default_alpha(), snr_db: None, seed, spectra: None }
    }

    pub fn with_snr(mut self, snr_db: Option<f64>) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidArgument("r must be at least 1".into()));
        }
        if self.r > self.n {
            return Err(Error::InvalidArgument(format!("r = {} exceeds n = {}", self.r, self.n)));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(Error::OutOfRange(format!("nu = {} not in [0, 1]", self.nu)));
        }
        if !(self.dirichlet_alpha > 0.0) || !self.dirichlet_alpha.is_finite() {
            return Err(Error::OutOfRange(format!("dirichlet_alpha = {} must be positive", self.dirichlet_alpha)));
        }
        if let Some(snr) = self.snr_db {
            check_snr(snr)?;
        }
        Ok(())
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if !snr.is_finite() || snr <= MIN_SNR_DB {
        return Err(Error::OutOfRange(format!("snr_db = {snr} must be finite and above {MIN_SNR_DB}")));
    }
    Ok(())
}

/// A generated instance with its ground truth.
#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    pub x: DataMatrix,
    pub w: SourceMatrix,
    pub h: CoefficientMatrix,
    /// `true_source_indices[k]` is the data column holding source `k`.
    pub true_source_indices: Vec<usize>,
    /// Largest column ℓ₂ norm of the noise, before clamping.
    pub noise_eps: f64,
    /// SNR of the drawn noise in dB; `None` when noiseless.
    pub snr_realized: Option<f64>,
}

/// SplitMix64 mix of `master` and `index`, used for per-trial and per-stream
/// seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_SPECTRA: u64 = 0;
const STREAM_COEFFICIENTS: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// `r` smooth curves of length `m`, each a sum of 3 to 6 Gaussian bumps
/// rescaled to span `[0.05, 0.95]`. Curves are redrawn until every pair has
/// cosine similarity below 0.999.
pub fn gen_spectra(m: usize, r: usize, seed: u64) -> Result<SourceMatrix> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("synthetic spectra need m >= 4, got {m}")));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(m, r);
    for k in 0..r {
        let mut accepted = false;
        for _ in 0..MAX_SPECTRA_RETRIES {
            let Some(curve) = bump_curve(m, &mut rng) else { continue };
            let distinct = (0..k).all(|j| {
                let prev = w.column(j);
                let dot: f64 = prev.iter().zip(&curve).map(|(a, b)| a * b).sum();
                let nc = curve.iter().map(|v| v * v).sum::<f64>().sqrt();
                dot / (prev.norm() * nc) < MAX_COSINE
            });
            if distinct {
                for (i, v) in curve.into_iter().enumerate() {
                    w[(i, k)] = v;
                }
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::RetryExhausted(MAX_SPECTRA_RETRIES));
        }
    }
    SourceMatrix::new(w)
}

fn bump_curve(m: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let bumps = rng.random_range(3..=6);
    let span = (m - 1) as f64;
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let center = rng.random_range(0.0..=span);
            let width = rng.random_range((span / 20.0).max(0.5)..=(span / 4.0).max(1.0));
            let height = rng.random_range(0.2..=1.0);
            (center, width, height)
        })
        .collect();
    let raw: Vec<f64> =
        (0..m).map(|b| params.iter().map(|(c, s, a)| a * (-((b as f64 - c) / s).powi(2) / 2.0).exp()).sum()).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-9 * hi) {
        return None;
    }
    Some(raw.into_iter().map(|v| 0.05 + 0.9 * (v - lo) / (hi - lo)).collect())
}

/// Reads a spectra CSV (bands × endmembers) and picks `r` distinct columns at
/// random. When `r` equals the file width all columns are kept in file order.
pub fn load_spectra(path: &Path, r: usize, seed: u64) -> Result<SourceMatrix> {
    let all = read_matrix(path)?;
    if let Some(v) = all.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange(format!("{}: spectral value {v} outside [0, 1]", path.display())));
    }
    let width = all.ncols();
    if r == 0 || r > width {
        return Err(Error::InvalidArgument(format!("{}: requested {r} spectra, file has {width}", path.display())));
    }
    if r == width {
        return SourceMatrix::new(all);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, width, r).into_vec();
    SourceMatrix::new(all.select_columns(&picks))
}

/// `H` and the positions of the pure columns.
pub fn gen_coefficients(cfg: &GenConfig) -> Result<(CoefficientMatrix, Vec<usize>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_COEFFICIENTS));
    coefficients_with(cfg, &mut rng)
}

fn coefficients_with(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Result<(CoefficientMatrix, Vec<usize>)> {
    let r = cfg.r;
    let rows = cfg.model.extended_rank(r);
    let gamma =
        Gamma::new(cfg.dirichlet_alpha, 1.0).map_err(|e| Error::InvalidArgument(format!("dirichlet_alpha: {e}")))?;
    let mut unpermuted = DMatrix::zeros(rows, cfg.n);
    for k in 0..r {
        unpermuted[(k, k)] = 1.0;
    }
    let nonlinear = cfg.model != MixingModel::Linear;
    for j in r..cfg.n {
        let col = loop {
            let mut col: Vec<f64> = (0..rows).map(|_| gamma.sample(rng)).collect();
            if nonlinear {
                for (i, v) in col.iter_mut().enumerate() {
                    *v *= if i < r { 1.0 - cfg.nu } else { cfg.nu };
                }
            }
            let s: f64 = col.iter().sum();
            if s > 0.0 && s.is_finite() {
                col.iter_mut().for_each(|v| *v /= s);
                break col;
            }
        };
        for (i, v) in col.into_iter().enumerate() {
            unpermuted[(i, j)] = v;
        }
    }
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.shuffle(rng);
    // Column `order[p]` of the unpermuted matrix lands at position `p`.
    let h = unpermuted.select_columns(&order);
    let mut true_idx = vec![0; r];
    for (p, &src) in order.iter().enumerate() {
        if src < r {
            true_idx[src] = p;
        }
    }
    Ok((CoefficientMatrix::new(h)?, true_idx))
}

/// `X̄ = [Π₂(W) H + N]₊` with noise drawn from `seed`.
pub fn assemble(
    w: &SourceMatrix,
    h: &CoefficientMatrix,
    model: MixingModel,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<(DataMatrix, f64, Option<f64>)> {
    let ext = extend(w.as_matrix(), model, 2)?;
    if ext.ncols() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "extended matrix has {} columns, coefficients have {} rows",
            ext.ncols(),
            h.nrows()
        )));
    }
    let clean = ext.matrix() * h.as_matrix();
    let Some(snr) = snr_db else {
        return Ok((DataMatrix::new(clean)?, 0.0, None));
    };
    check_snr(snr)?;
    let (m, n) = clean.shape();
    let power = clean.norm_squared();
    let sigma = (power / ((m * n) as f64 * 10f64.powf(snr / 10.0))).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = DMatrix::from_fn(m, n, |_, _| normal.sample(&mut rng));
    let eps = noise.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let realized = 10.0 * (power / noise.norm_squared()).log10();
    let noisy = (clean + noise).map(|v| v.max(0.0));
    Ok((DataMatrix::new(noisy)?, eps, Some(realized)))
}

/// Generates sources, coefficients and data for `cfg`.
pub fn generate(cfg: &GenConfig) -> Result<GeneratedDataset> {
    cfg.validate()?;
    let spectra_seed = derive_seed(cfg.seed, STREAM_SPECTRA);
    let w = match &cfg.spectra {
        Some(path) => load_spectra(path, cfg.r, spectra_seed)?,
        None => gen_spectra(cfg.m, cfg.r, spectra_seed)?,
    };
    if w.nrows() != cfg.m {
        return Err(Error::DimensionMismatch(format!("spectra have {} bands, config says m = {}", w.nrows(), cfg.m)));
    }
    let (h, true_source_indices) = gen_coefficients(cfg)?;
    let (x, noise_eps, snr_realized) = assemble(&w, &h, cfg.model, cfg.snr_db, derive_seed(cfg.seed, STREAM_NOISE))?;
    Ok(GeneratedDataset { x, w, h, true_source_indices, noise_eps, snr_realized })
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    config: GenConfig,
    true_source_indices: Vec<usize>,
    noise_eps: f64,
    snr_realized: Option<f64>,
}

/// Writes `X.csv`, `W.csv`, `H.csv` and `meta.json` into `dir`.
pub fn write_bundle(dir: &Path, cfg: &GenConfig, data: &GeneratedDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("X.csv"), data.x.as_matrix())?;
    write_matrix(&dir.join("W.csv"), data.w.as_matrix())?;
    write_matrix(&dir.join("H.csv"), data.h.as_matrix())?;
    let meta = BundleMeta {
        config: cfg.clone(),
        true_source_indices: data.true_source_indices.clone(),
        noise_eps: data.noise_eps,
        snr_realized: data.snr_realized,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<(GenConfig, GeneratedDataset)> {
    let meta: BundleMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    let data = GeneratedDataset {
        x: DataMatrix::new(read_matrix(&dir.join("X.csv"))?)?,
        w: SourceMatrix::new(read_matrix(&dir.join("W.csv"))?)?,
        h: CoefficientMatrix::new(read_matrix(&dir.join("H.csv"))?)?,
        true_source_indices: meta.true_source_indices,
        noise_eps: meta.noise_eps,
        snr_realized: meta.snr_realized,
    };
    Ok((meta.config, data))
}

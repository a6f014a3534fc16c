//! Near-separable blind source separation for linear-quadratic (LQ) mixtures.
//!
//! The data model is `X̄ = [Π₂(W) H + N]₊`, where the columns of `Π₂(W)` are the
//! primary sources `w_k` followed by their pairwise Hadamard products (the
//! "virtual" sources), every column of `H` lies in the unit sub-simplex
//! `Δ = {h ≥ 0, Σ h ≤ 1}`, and each primary source appears (up to noise) as a
//! column of the data.
//!
//! Module map:
//!
//! - [`mixmodel`]: matrix containers, mixing-model taxonomy and the extended
//!   source matrix `Π_q(W)` with per-column provenance tags.
//! - [`projector`]: score functions and the projection of a vector onto the
//!   convex hull of a dictionary and the origin.
//! - [`extractors`]: greedy extraction (SPA, SNPA, SNPALQ).
//! - [`bruteforce`]: robust-loner detection and the brute-force (BF)
//!   extractor, standalone or as a post-processing of SNPALQ.
//! - [`theory`]: margins, residual gaps, recovery conditions and admissible
//!   noise levels.
//! - [`synthdata`]: synthetic near-separable data generation.
//! - [`metrics`]: spectral similarity and bottleneck source matching.
//! - [`bench`]: Monte-Carlo sweeps and condition sweeps writing CSV.
//! - [`io`]: CSV matrix reading and writing.
//!
//! ```
//! use lqunmix::extractors::{snpalq, ExtractionConfig};
//! use lqunmix::mixmodel::{DataMatrix, MixingModel};
//! use lqunmix::projector::SquaredEuclidean;
//! use nalgebra::DMatrix;
//!
//! // Two sources and one mixture lying on the segment between them.
//! let x = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
//! let data = DataMatrix::new(x).unwrap();
//! let cfg = ExtractionConfig::new(2, MixingModel::Linear);
//! let result = snpalq(&data, &cfg, &SquaredEuclidean).unwrap();
//! assert_eq!(result.indices, vec![0, 1]);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bruteforce;
pub mod error;
pub mod extractors;
pub mod io;
pub mod metrics;
pub mod mixmodel;
pub mod projector;
pub mod synthdata;
pub mod theory;

pub use error::{Error, Result};

//! Separation quality: spectral similarity and source matching.

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

/// Similarity above which a source counts as recovered.
pub const PERFECT_THRESHOLD: f64 = 0.999;

/// Normalized inner product `uᵀv / (‖u‖₂ ‖v‖₂)`.
///
/// This is the quantity commonly reported as SAD in the unmixing literature;
/// no arccos is applied, so 1 means identical directions.
pub fn sad(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("vectors of length {} and {}", u.len(), v.len())));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidArgument("sad of a zero vector".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

fn sad_view(u: DVectorView<'_, f64>, v: DVectorView<'_, f64>) -> Result<f64> {
    sad(u.as_slice(), v.as_slice())
}

/// Result of matching true sources against extracted columns.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MatchReport {
    /// `(source index, data column index)` pairs, sorted by source index.
    pub pairs: Vec<(usize, usize)>,
    /// Similarity of each pair, aligned with `pairs`.
    pub sad: Vec<f64>,
    /// Smallest similarity over the pairs.
    pub theta_min: f64,
    /// Number of extracted columns equals the number of sources and
    /// `theta_min > 0.999`.
    pub perfect: bool,
}

/// Assigns extracted columns `k` of `x` to the columns of `w` so as to
/// maximize the smallest similarity.
pub fn match_sources(w: &DMatrix<f64>, x: &DMatrix<f64>, k: &[usize]) -> Result<MatchReport> {
    if k.is_empty() {
        return Err(Error::Empty("no extracted columns to match".into()));
    }
    if w.ncols() == 0 {
        return Err(Error::Empty("no sources to match".into()));
    }
    if w.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch(format!("sources have {} rows, data has {}", w.nrows(), x.nrows())));
    }
    if let Some(&j) = k.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::OutOfRange(format!("column index {j} with {} data columns", x.ncols())));
    }
    let r = w.ncols();
    let mut sim = DMatrix::zeros(r, k.len());
    for i in 0..r {
        for (c, &j) in k.iter().enumerate() {
            sim[(i, c)] = sad_view(w.column(i), x.column(j))?;
        }
    }
    let (theta_min, assignment) = bottleneck_assignment(&sim);
    let mut pairs: Vec<(usize, usize)> = assignment.iter().map(|&(i, c)| (i, k[c])).collect();
    pairs.sort_unstable();
    let sads = assignment_sads(&pairs, w, x)?;
    Ok(MatchReport { perfect: k.len() == r && theta_min > PERFECT_THRESHOLD, pairs, sad: sads, theta_min })
}

fn assignment_sads(pairs: &[(usize, usize)], w: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    pairs.iter().map(|&(i, j)| sad_view(w.column(i), x.column(j))).collect()
}

/// Max-min assignment of `min(rows, cols)` pairs in a similarity matrix.
///
/// Returns the optimal bottleneck value and the `(row, col)` pairs.
pub fn bottleneck_assignment(sim: &DMatrix<f64>) -> (f64, Vec<(usize, usize)>) {
    let (rows, cols) = sim.shape();
    let size = rows.min(cols);
    if size == 0 {
        return (f64::NAN, Vec::new());
    }
    let mut values: Vec<f64> = sim.iter().copied().collect();
    values.sort_unstable_by(f64::total_cmp);
    values.dedup();
    // Largest threshold admitting a full matching; the smallest value always does.
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if max_matching(sim, values[mid]).len() == size {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut pairs = max_matching(sim, values[lo]);
    pairs.sort_unstable();
    (values[lo], pairs)
}

/// Maximum bipartite matching (Kuhn) on edges with `sim ≥ threshold`.
fn max_matching(sim: &DMatrix<f64>, threshold: f64) -> Vec<(usize, usize)> {
    let (rows, cols) = sim.shape();
    let mut col_owner: Vec<Option<usize>> = vec![None; cols];

    fn augment(
        row: usize,
        sim: &DMatrix<f64>,
        threshold: f64,
        seen: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        for c in 0..sim.ncols() {
            if sim[(row, c)] >= threshold && !seen[c] {
                seen[c] = true;
                let free = match col_owner[c] {
                    None => true,
                    Some(other) => augment(other, sim, threshold, seen, col_owner),
                };
                if free {
                    col_owner[c] = Some(row);
                    return true;
                }
            }
        }
        false
    }

    for row in 0..rows {
        let mut seen = vec![false; cols];
        augment(row, sim, threshold, &mut seen, &mut col_owner);
    }
    col_owner.iter().enumerate().filter_map(|(c, o)| o.map(|row| (row, c))).collect()
}

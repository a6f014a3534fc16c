//! Greedy near-separable extraction.
//!
//! [`snpalq`] selects, at each step, the data column with the largest residual
//! score, then re-projects every data column onto the hull of the extended
//! matrix of the selected columns (primaries plus their products, depending on
//! the mixing model) and the origin. With [`MixingModel::Linear`] this is SNPA.
//! [`spa`] is the classical successive projection algorithm.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mixmodel::{extend_unchecked, ColumnTag, DataMatrix, MixingModel};
use crate::projector::{HullProjector, ProjectionResult, ScoreFunction, SolverOptions};

/// Settings for [`snpalq`] and [`snpa`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExtractionConfig {
    /// Maximum number of extracted columns.
    pub r_max: usize,
    /// Stop once `‖R‖_F / ‖X̄‖_F ≤ t`.
    pub t: f64,
    pub model: MixingModel,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Start each projection from the previous iteration's coefficients.
    #[serde(default)]
    pub warm_start: bool,
}

impl ExtractionConfig {
    /// `t = 0`, default solver, cold starts.
    pub fn new(r_max: usize, model: MixingModel) -> Self {
        Self { r_max, t: 0.0, model, solver: SolverOptions::default(), warm_start: false }
    }

    pub fn with_tolerance(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_max == 0 {
            return Err(Error::InvalidArgument("r_max must be at least 1".into()));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidArgument(format!("t must be finite and nonnegative, got {}", self.t)));
        }
        self.solver.validate()
    }
}

/// Output of a greedy extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionResult {
    /// Selected data-column indices, in selection order.
    pub indices: Vec<usize>,
    /// `‖R‖_F / ‖X̄‖_F` after each selection.
    pub residual_history: Vec<f64>,
    /// Coefficients of every data column over the final dictionary
    /// (`tags.len()` rows, `n` columns).
    pub coefficients: DMatrix<f64>,
    /// Provenance of the final dictionary columns; `Primary(i)` refers to
    /// `indices[i]`.
    pub tags: Vec<ColumnTag>,
}

impl ExtractionResult {
    pub fn final_relative_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }
}

/// SNPALQ. Runs SNPA when `cfg.model` is linear.
pub fn snpalq(x: &DataMatrix, cfg: &ExtractionConfig, score: &dyn ScoreFunction) -> Result<ExtractionResult> {
    cfg.validate()?;
    let xm = x.as_matrix();
    let n = xm.ncols();
    let total = xm.norm();
    let mut indices: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut tags: Vec<ColumnTag> = Vec::new();
    let mut coefficients = DMatrix::zeros(0, n);
    if total == 0.0 {
        return Ok(ExtractionResult { indices, residual_history: history, coefficients, tags });
    }

    let mut scores: Vec<f64> = xm.column_iter().map(|c| score.evaluate(c.as_slice())).collect();
    let mut relative = 1.0;
    let mut previous: Option<Vec<ProjectionResult>> = None;
    while relative > cfg.t && indices.len() < cfg.r_max {
        let Some(p) = argmax_excluding(&scores, &indices) else { break };
        indices.push(p);

        let ext = extend_unchecked(&x.select_columns(&indices), cfg.model, 2);
        let new_tags = ext.tags().to_vec();
        let projector = HullProjector::new(ext.matrix(), score, cfg.solver)?;
        let starts = match (&previous, cfg.warm_start) {
            (Some(prev), true) => Some(remap_coefficients(prev, &tags, &new_tags)),
            _ => None,
        };
        let results = project_all(&projector, xm, starts.as_deref())?;

        let mut frob = 0.0;
        for (j, r) in results.iter().enumerate() {
            scores[j] = r.score;
            frob += r.residual.norm_squared();
        }
        relative = frob.sqrt() / total;
        history.push(relative);
        tags = new_tags;
        previous = Some(results);
    }

    if let Some(results) = previous {
        coefficients = DMatrix::zeros(tags.len(), n);
        for (j, r) in results.iter().enumerate() {
            coefficients.set_column(j, &r.coefficients);
        }
    }
    Ok(ExtractionResult { indices, residual_history: history, coefficients, tags })
}

/// SNPA: [`snpalq`] with the linear model.
pub fn snpa(x: &DataMatrix, cfg: &ExtractionConfig, score: &dyn ScoreFunction) -> Result<ExtractionResult> {
    let cfg = ExtractionConfig { model: MixingModel::Linear, ..cfg.clone() };
    snpalq(x, &cfg, score)
}

/// Successive projection algorithm: `r` columns of largest norm after
/// successive orthogonal deflation.
pub fn spa(x: &DataMatrix, r: usize) -> Result<Vec<usize>> {
    let (m, n) = x.shape();
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    if r > m.min(n) {
        return Err(Error::Rank(format!("cannot select {r} columns from a {m}x{n} matrix")));
    }
    let mut res = x.as_matrix().clone();
    let initial = res.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max);
    let mut selected = Vec::with_capacity(r);
    for step in 0..r {
        let norms: Vec<f64> = res.column_iter().map(|c| c.norm_squared()).collect();
        let Some(p) = argmax_excluding(&norms, &selected) else {
            return Err(Error::Rank(format!("no column left at step {}", step + 1)));
        };
        // Columns already explained up to rounding count as zero.
        if norms[p] <= initial * 1e-24 {
            return Err(Error::Rank(format!("largest residual column is zero at step {}", step + 1)));
        }
        selected.push(p);
        let u: DVector<f64> = res.column(p) / norms[p].sqrt();
        let proj = u.tr_mul(&res);
        res -= &u * proj;
    }
    Ok(selected)
}

/// Lowest index attaining the maximum among indices not in `skip`. Returns
/// `None` when every remaining score is zero.
fn argmax_excluding(scores: &[f64], skip: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &s) in scores.iter().enumerate() {
        if skip.contains(&j) {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.filter(|(_, s)| *s > 0.0).map(|(j, _)| j)
}

fn project_all(
    projector: &HullProjector<'_>,
    x: &DMatrix<f64>,
    starts: Option<&[Vec<f64>]>,
) -> Result<Vec<ProjectionResult>> {
    use rayon::prelude::*;
    (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let start = starts.map(|s| s[j].as_slice());
            projector.project_from(x.column(j).as_slice(), start)
        })
        .collect()
}

/// Carries coefficients over to a grown dictionary by matching tags.
fn remap_coefficients(prev: &[ProjectionResult], old: &[ColumnTag], new: &[ColumnTag]) -> Vec<Vec<f64>> {
    let position: HashMap<&ColumnTag, usize> = new.iter().enumerate().map(|(i, t)| (t, i)).collect();
    prev.iter()
        .map(|r| {
            let mut h = vec![0.0; new.len()];
            for (tag, v) in old.iter().zip(r.coefficients.iter()) {
                if let Some(&i) = position.get(tag) {
                    h[i] = *v;
                }
            }
            h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector::SquaredEuclidean;

    fn data(m: usize, cols: &[&[f64]]) -> DataMatrix {
        let flat: Vec<f64> = cols.iter().flat_map(|c| c.iter().copied()).collect();
        DataMatrix::new(DMatrix::from_column_slice(m, cols.len(), &flat)).unwrap()
    }

    #[test]
    fn spa_picks_identity_columns() {
        let x = data(3, &[&[0.3, 0.3, 0.3], &[1.0, 0.0, 0.0], &[0.2, 0.5, 0.1], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let mut k = spa(&x, 3).unwrap();
        k.sort();
        assert_eq!(k, vec![1, 3, 4]);
        assert_eq!(spa(&x, 1).unwrap(), vec![1]);
    }

    #[test]
    fn spa_ties_and_rank() {
        let x = data(2, &[&[0.5, 0.5], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(spa(&x, 1).unwrap(), vec![1]);
        assert!(matches!(spa(&x, 2), Err(Error::Rank(_))));
        assert!(matches!(spa(&x, 3), Err(Error::Rank(_))));
    }

    #[test]
    fn snpa_single_step_is_argmax() {
        let x = data(2, &[&[0.2, 0.1], &[0.9, 0.3], &[0.1, 0.9]]);
        let res = snpa(&x, &ExtractionConfig::new(1, MixingModel::Lq), &SquaredEuclidean).unwrap();
        assert_eq!(res.indices, vec![1]);
        assert_eq!(res.residual_history.len(), 1);
        assert_eq!(res.tags, vec![ColumnTag::Primary(0)]);
    }

    #[test]
    fn zero_data_returns_empty() {
        let x = DataMatrix::new(DMatrix::zeros(3, 4)).unwrap();
        let res = snpalq(&x, &ExtractionConfig::new(2, MixingModel::Lq), &SquaredEuclidean).unwrap();
        assert!(res.indices.is_empty());
        assert!(res.residual_history.is_empty());
    }

    #[test]
    fn tolerance_stops_early() {
        let x = data(2, &[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5], &[0.25, 0.25]]);
        let cfg = ExtractionConfig::new(4, MixingModel::Linear).with_tolerance(1e-9);
        let res = snpalq(&x, &cfg, &SquaredEuclidean).unwrap();
        let mut k = res.indices.clone();
        k.sort();
        assert_eq!(k, vec![0, 1]);
        assert!(res.final_relative_residual().unwrap() <= 1e-9);
        assert_eq!(res.coefficients.shape(), (2, 4));
    }

    #[test]
    fn rejects_invalid_config() {
        let x = data(1, &[&[1.0]]);
        assert!(snpalq(&x, &ExtractionConfig::new(0, MixingModel::Lq), &SquaredEuclidean).is_err());
        let bad = ExtractionConfig::new(1, MixingModel::Lq).with_tolerance(-1.0);
        assert!(snpalq(&x, &bad, &SquaredEuclidean).is_err());
    }
}

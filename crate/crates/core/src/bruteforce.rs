//! Robust-loner detection and the brute-force (BF) extractor.
//!
//! A column `x̄_k` is a robust loner when its projection onto the extended
//! matrix of the columns that are *not* near it (score of the difference
//! above `d`) still leaves a residual score above a noise-dependent
//! threshold. Loners are then grouped by single linkage at a noise-dependent
//! radius and one representative per group is returned.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixmodel::{extend_unchecked, max_col_norm, DataMatrix, MixingModel};
use crate::projector::{HullProjector, ScoreFunction, SolverOptions};

/// Which loner threshold to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdForm {
    /// `(L/2) ε² (1 + max(1, 2K + ε))²`.
    #[default]
    General,
    /// `(L/2) ε² (3 + ε)²`, which equals the general form when `K = 1`.
    Literal,
}

/// Thresholds for loner detection and clustering.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustLonerParams {
    /// Bound on the column ℓ₂ norm of the noise.
    pub epsilon: f64,
    /// Columns within score `d` of the tested one are left out of its
    /// dictionary.
    pub d: f64,
    /// A column is a loner when its residual score exceeds this.
    pub loner_rhs: f64,
    /// Single-linkage radius for grouping loners.
    pub cluster_radius: f64,
    /// Residual scores at most `zero_floor · f(x̄_k)` count as zero, so that
    /// solver round-off is not mistaken for a positive score. The default
    /// suits the exact solver for quadratic scores; iterative solves of
    /// other scores need a larger floor.
    pub zero_floor: f64,
}

/// Default relative floor for residual scores.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-20;

impl RobustLonerParams {
    /// Parameters for noiseless data: everything zero except the floor.
    pub fn noiseless() -> Self {
        Self { epsilon: 0.0, d: 0.0, loner_rhs: 0.0, cluster_radius: 0.0, zero_floor: DEFAULT_ZERO_FLOOR }
    }

    /// Evaluates the thresholds from scalar constants: noise bound `epsilon`,
    /// largest data column norm `k`, score constants `mu` and `l`, and the
    /// order-4 margin `alpha4` of the sources.
    pub fn from_constants(epsilon: f64, k: f64, mu: f64, l: f64, alpha4: f64, form: ThresholdForm) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::OutOfRange(format!("epsilon = {epsilon} must be finite and nonnegative")));
        }
        if epsilon == 0.0 {
            return Ok(Self::noiseless());
        }
        if !(alpha4 > 0.0) {
            return Err(Error::OutOfRange(format!("order-4 margin must be positive, got {alpha4}")));
        }
        let d = epsilon * exclusion_factor(epsilon, k, mu, l, alpha4);
        let loner_rhs = match form {
            ThresholdForm::General => 0.5 * l * epsilon.powi(2) * (1.0 + (2.0 * k + epsilon).max(1.0)).powi(2),
            ThresholdForm::Literal => 0.5 * l * epsilon.powi(2) * (3.0 + epsilon).powi(2),
        };
        Ok(Self {
            epsilon,
            d,
            loner_rhs,
            cluster_radius: cluster_radius(epsilon, d, k, mu, l),
            zero_floor: DEFAULT_ZERO_FLOOR,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.epsilon, self.d, self.loner_rhs, self.cluster_radius, self.zero_floor];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::OutOfRange("loner parameters must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// `V` such that `d = ε V`.
pub fn exclusion_factor(epsilon: f64, k: f64, mu: f64, l: f64, alpha4: f64) -> f64 {
    let y = 1.0 + k.max(1.0);
    let bracket = epsilon * (2.0 * k + epsilon).powi(2) / (2.0 * y) + k + (2.0 * k + epsilon).max(1.0) * (epsilon + k);
    l * l / (mu * alpha4 * alpha4) * k * k * y.powi(3) * bracket + 1.5 * l * (4.0 * k + epsilon)
}

/// `2 √((2/μ)(d + ε L (2K + ε)))`.
pub fn cluster_radius(epsilon: f64, d: f64, k: f64, mu: f64, l: f64) -> f64 {
    2.0 * ((2.0 / mu) * (d + epsilon * l * (2.0 * k + epsilon))).sqrt()
}

/// Thresholds for data `x` with `K = K(X̄)` and the score's constants.
pub fn compute_d(
    epsilon: f64,
    x: &DataMatrix,
    score: &dyn ScoreFunction,
    alpha4: f64,
    form: ThresholdForm,
) -> Result<RobustLonerParams> {
    let k = max_col_norm(x.as_matrix())?;
    RobustLonerParams::from_constants(epsilon, k, score.mu(), score.lipschitz(), alpha4, form)
}

/// Outcome of the loner test for one column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LonerVerdict {
    pub index: usize,
    pub is_loner: bool,
    /// Residual score of the column against the reduced dictionary.
    pub score: f64,
    /// Number of columns (itself included) left out of the dictionary.
    pub excluded: usize,
}

/// Loner test for column `k` of `x`.
pub fn is_robust_loner(
    k: usize,
    x: &DataMatrix,
    params: &RobustLonerParams,
    score: &dyn ScoreFunction,
    model: MixingModel,
    solver: SolverOptions,
) -> Result<LonerVerdict> {
    params.validate()?;
    let xm = x.as_matrix();
    if k >= xm.ncols() {
        return Err(Error::OutOfRange(format!("column {k} of {}", xm.ncols())));
    }
    loner_verdict(k, xm, params, score, model, solver)
}

fn loner_verdict(
    k: usize,
    xm: &DMatrix<f64>,
    params: &RobustLonerParams,
    score: &dyn ScoreFunction,
    model: MixingModel,
    solver: SolverOptions,
) -> Result<LonerVerdict> {
    let xk = xm.column(k);
    let mut keep = Vec::new();
    let mut diff = vec![0.0; xm.nrows()];
    for i in 0..xm.ncols() {
        for (dst, (a, b)) in diff.iter_mut().zip(xm.column(i).iter().zip(xk.iter())) {
            *dst = a - b;
        }
        if i != k && score.evaluate(&diff) > params.d {
            keep.push(i);
        }
    }
    let own = score.evaluate(xk.as_slice());
    let dictionary = extend_unchecked(&xm.select_columns(&keep), model, 2);
    let achieved = HullProjector::new(dictionary.matrix(), score, solver)?.project(xk.as_slice())?.score;
    let threshold = params.loner_rhs.max(params.zero_floor * own);
    Ok(LonerVerdict { index: k, is_loner: achieved > threshold, score: achieved, excluded: xm.ncols() - keep.len() })
}

/// Loner verdicts for every column of `x`.
pub fn loner_verdicts(
    x: &DataMatrix,
    params: &RobustLonerParams,
    score: &dyn ScoreFunction,
    model: MixingModel,
    solver: SolverOptions,
) -> Result<Vec<LonerVerdict>> {
    params.validate()?;
    let xm = x.as_matrix();
    (0..xm.ncols()).into_par_iter().map(|k| loner_verdict(k, xm, params, score, model, solver)).collect()
}

/// Single-linkage groups of `members` (columns of `x`) at `radius`; returns
/// the lowest index of each group, ascending.
pub fn cluster_representatives(x: &DMatrix<f64>, members: &[usize], radius: f64) -> Vec<usize> {
    let n = members.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            let dist = (x.column(members[a]) - x.column(members[b])).norm();
            if dist <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut reps: Vec<usize> = (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            (root, members[i])
        })
        .fold(std::collections::BTreeMap::new(), |mut acc, (root, idx)| {
            let e: &mut usize = acc.entry(root).or_insert(idx);
            *e = (*e).min(idx);
            acc
        })
        .into_values()
        .collect();
    reps.sort_unstable();
    reps
}

/// BF: one representative per group of robust loners, ascending.
pub fn bf(
    x: &DataMatrix,
    params: &RobustLonerParams,
    score: &dyn ScoreFunction,
    model: MixingModel,
    solver: SolverOptions,
) -> Result<Vec<usize>> {
    let verdicts = loner_verdicts(x, params, score, model, solver)?;
    let loners: Vec<usize> = verdicts.iter().filter(|v| v.is_loner).map(|v| v.index).collect();
    Ok(cluster_representatives(x.as_matrix(), &loners, params.cluster_radius))
}

/// BF restricted to the candidate columns; indices refer to `x`.
pub fn postprocess(
    x: &DataMatrix,
    candidates: &[usize],
    params: &RobustLonerParams,
    score: &dyn ScoreFunction,
    model: MixingModel,
    solver: SolverOptions,
) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("candidate indices must be distinct".into()));
    }
    if let Some(&j) = sorted.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::OutOfRange(format!("candidate {j} with {} data columns", x.ncols())));
    }
    let sub = DataMatrix::new(x.select_columns(&sorted))?;
    let local = bf(&sub, params, score, model, solver)?;
    Ok(local.into_iter().map(|i| sorted[i]).collect())
}

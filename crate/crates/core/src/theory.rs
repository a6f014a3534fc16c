//! Margins, residual gaps, recovery conditions and admissible noise levels.
//!
//! Notation: `α_B(A)` is the smallest ℓ₂ distance from a column `a_j` to the
//! hull of the origin and the columns of `B` other than the one tagged `j`;
//! `R_B(x)` is the residual of `x` after projection onto the hull of `B` and
//! the origin; `K(A)` is the largest column norm.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bruteforce::{cluster_radius, exclusion_factor};
use crate::error::{Error, Result};
use crate::mixmodel::{extend, extend_unchecked, max_col_norm, ExtendedMatrix, MixingModel};
use crate::projector::{hull_project, HullProjector, ScoreFunction, SolverOptions, SquaredEuclidean};

/// Largest number of sources for exhaustive split enumeration.
pub const MAX_EXHAUSTIVE_SOURCES: usize = 15;

/// Constants for the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    /// Ratio constant `G > 1` of the recovery condition.
    pub g: f64,
    /// Slack constant of the LQ bound; `None` means `β^LQ / √2`.
    pub m: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self { g: 2.0, m: None, solver: SolverOptions::tight() }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 1.0) || !self.g.is_finite() {
            return Err(Error::OutOfRange(format!("G = {} must exceed 1", self.g)));
        }
        if let Some(m) = self.m {
            if !(m >= 0.0) {
                return Err(Error::OutOfRange(format!("M = {m} must be nonnegative")));
            }
        }
        self.solver.validate()
    }
}

fn residual(
    x: &[f64],
    dictionary: &DMatrix<f64>,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<DVector<f64>> {
    Ok(hull_project(x, dictionary, score, solver)?.residual)
}

/// `α_D(A)` for a tagged dictionary: for each column `a_j`, the distance to
/// the hull of `D` without the primary column `j`.
pub fn alpha_margin(a: &DMatrix<f64>, dictionary: &ExtendedMatrix, solver: SolverOptions) -> Result<f64> {
    if a.ncols() == 0 {
        return Err(Error::Empty("alpha margin of a matrix with no columns".into()));
    }
    if a.nrows() != dictionary.matrix().nrows() {
        return Err(Error::DimensionMismatch("columns and dictionary differ in length".into()));
    }
    let distances: Result<Vec<f64>> = (0..a.ncols())
        .into_par_iter()
        .map(|j| {
            let d = dictionary.without_primaries(&[j]);
            Ok(residual(a.column(j).as_slice(), &d, &SquaredEuclidean, solver)?.norm())
        })
        .collect();
    Ok(distances?.into_iter().fold(f64::INFINITY, f64::min))
}

/// `α_W(W)`: distance of each source to the hull of the others.
pub fn alpha_w(w: &DMatrix<f64>, solver: SolverOptions) -> Result<f64> {
    alpha_margin(w, &extend(w, MixingModel::Linear, 2)?, solver)
}

/// `α_{Π_q(W)}(W)` with the products of `model`.
pub fn alpha_pi(w: &DMatrix<f64>, model: MixingModel, order: usize, solver: SolverOptions) -> Result<f64> {
    alpha_margin(w, &extend(w, model, order)?, solver)
}

/// Residual-gap quantities of a source matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualGaps {
    /// `min_j ‖R_{Π₂(A)∖{j}}(a_j)‖`.
    pub nu: f64,
    /// `min_{i≠j} ‖R_{Π₂(A)∖{i,j}}(a_j) − R_{Π₂(A)∖{i,j}}(a_i)‖`; infinite
    /// for a single column.
    pub gamma: f64,
    /// `min(ν, γ/√2)`.
    pub beta_lin: f64,
    /// `min((ν/2) √(μ/L) (1 − 1/G), γ)`.
    pub beta_lq: f64,
}

/// Residual gaps of `a` against its own extended matrix under `model`.
pub fn residual_gaps(
    a: &DMatrix<f64>,
    model: MixingModel,
    g: f64,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<ResidualGaps> {
    let ext = extend(a, model, 2)?;
    let r = a.ncols();
    let nus: Result<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|j| Ok(residual(a.column(j).as_slice(), &ext.without_primaries(&[j]), score, solver)?.norm()))
        .collect();
    let nu = nus?.into_iter().fold(f64::INFINITY, f64::min);
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (i + 1..r).map(move |j| (i, j))).collect();
    let gammas: Result<Vec<f64>> = pairs
        .into_par_iter()
        .map(|(i, j)| {
            let d = ext.without_primaries(&[i, j]);
            let ri = residual(a.column(i).as_slice(), &d, score, solver)?;
            let rj = residual(a.column(j).as_slice(), &d, score, solver)?;
            Ok((rj - ri).norm())
        })
        .collect();
    let gamma = gammas?.into_iter().fold(f64::INFINITY, f64::min);
    let shrink = (score.mu() / score.lipschitz()).sqrt() * (1.0 - 1.0 / g);
    Ok(ResidualGaps {
        nu,
        gamma,
        beta_lin: nu.min(std::f64::consts::FRAC_1_SQRT_2 * gamma),
        beta_lq: (0.5 * nu * shrink).min(gamma),
    })
}

fn column_nu_gamma(a: &DMatrix<f64>) -> (f64, f64) {
    let nu = a.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
    let mut gamma = f64::INFINITY;
    for i in 0..a.ncols() {
        for j in i + 1..a.ncols() {
            gamma = gamma.min((a.column(i) - a.column(j)).norm());
        }
    }
    (nu, gamma)
}

/// `ω(A) = min(min_i ‖a_i‖, γ(A)/√2)` with `γ(A)` the smallest pairwise
/// column distance.
pub fn omega(a: &DMatrix<f64>) -> f64 {
    let (nu, gamma) = column_nu_gamma(a);
    nu.min(std::f64::consts::FRAC_1_SQRT_2 * gamma)
}

/// `Ω(A) = min((K(A)/2) √(μ/L) (1 − 1/G), γ(A))`.
pub fn big_omega(a: &DMatrix<f64>, mu: f64, l: f64, g: f64) -> f64 {
    let k = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let (_, gamma) = column_nu_gamma(a);
    (0.5 * k * (mu / l).sqrt() * (1.0 - 1.0 / g)).min(gamma)
}

/// Both sides of the recovery condition for one split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    /// `K(R_{Π₂(B̄)}(A))`.
    pub lhs: f64,
    /// `2G` times the largest residual norm of the extracted columns and of
    /// the products `a_i⊙a_j`, `b_i⊙b_j`, `a_i⊙b_j`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `K(R_{Π₂(B̄)}(A)) ≥ 2G K(R_{Π₂(B̄)}([b_i, a_i⊙a_j, b_i⊙b_j, a_i⊙b_j]))`.
///
/// `a` holds the sources still to extract, `b` the extracted ones and `b_bar`
/// their observed (possibly noisy) versions. The products include squares.
pub fn check_condition_32(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    b_bar: &DMatrix<f64>,
    g: f64,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<ConditionCheck> {
    if a.ncols() == 0 {
        return Err(Error::Empty("no sources left to extract".into()));
    }
    if b.ncols() != b_bar.ncols() || a.nrows() != b.nrows() || b.nrows() != b_bar.nrows() {
        return Err(Error::DimensionMismatch("condition inputs disagree in shape".into()));
    }
    let dictionary = extend_unchecked(b_bar, MixingModel::Lq, 2);
    let projector = HullProjector::new(dictionary.matrix(), score, solver)?;
    let norm_of = |x: &[f64]| -> Result<f64> { Ok(projector.project(x)?.residual.norm()) };

    let mut lhs: f64 = 0.0;
    for col in a.column_iter() {
        lhs = lhs.max(norm_of(col.as_slice())?);
    }
    let (ka, kb) = (a.ncols(), b.ncols());
    let mut others: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..ka {
        for j in i..ka {
            others.push(a.column(i).component_mul(&a.column(j)));
        }
    }
    for i in 0..kb {
        for j in i..kb {
            others.push(b.column(i).component_mul(&b.column(j)));
        }
    }
    for i in 0..ka {
        for j in 0..kb {
            others.push(a.column(i).component_mul(&b.column(j)));
        }
    }
    let norms: Result<Vec<f64>> = others.par_iter().map(|v| norm_of(v.as_slice())).collect();
    let rhs = 2.0 * g * norms?.into_iter().fold(0.0, f64::max);
    Ok(ConditionCheck { lhs, rhs, holds: lhs >= rhs })
}

/// Which source splits a sweep visits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Every nonempty `A`, with `B` its complement (possibly empty).
    #[default]
    All,
    /// Both `A` and `B` nonempty.
    ProperOnly,
}

/// One evaluated split; bit `i` of `a_mask` set means source `i` is in `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitRow {
    pub a_mask: u64,
    pub a_size: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Result of a split sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitSweep {
    pub rows: Vec<SplitRow>,
    /// Share of rows where the condition holds.
    pub fraction: f64,
}

fn split_row(
    w: &DMatrix<f64>,
    mask: u64,
    g: f64,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<SplitRow> {
    let (a_idx, b_idx): (Vec<usize>, Vec<usize>) = (0..w.ncols()).partition(|&i| mask >> i & 1 == 1);
    let a = w.select_columns(&a_idx);
    let b = w.select_columns(&b_idx);
    let c = check_condition_32(&a, &b, &b, g, score, solver)?;
    Ok(SplitRow { a_mask: mask, a_size: a_idx.len(), lhs: c.lhs, rhs: c.rhs, holds: c.holds })
}

fn finish_sweep(rows: Vec<SplitRow>) -> SplitSweep {
    let fraction =
        if rows.is_empty() { 0.0 } else { rows.iter().filter(|r| r.holds).count() as f64 / rows.len() as f64 };
    SplitSweep { rows, fraction }
}

/// Evaluates the recovery condition (noiseless, `B̄ = B`) on every split of
/// the columns of `w`.
pub fn split_sweep(
    w: &DMatrix<f64>,
    g: f64,
    mode: SplitMode,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<SplitSweep> {
    let r = w.ncols();
    if r == 0 {
        return Err(Error::Empty("no sources".into()));
    }
    if r > MAX_EXHAUSTIVE_SOURCES {
        return Err(Error::InvalidArgument(format!("{r} sources give too many splits; use split_sweep_sampled")));
    }
    let full = (1u64 << r) - 1;
    let masks: Vec<u64> = (1..=full).filter(|&m| mode == SplitMode::All || m != full).collect();
    let rows: Result<Vec<SplitRow>> = masks.into_par_iter().map(|m| split_row(w, m, g, score, solver)).collect();
    Ok(finish_sweep(rows?))
}

/// Like [`split_sweep`] on `samples` random splits (drawn with replacement).
pub fn split_sweep_sampled(
    w: &DMatrix<f64>,
    g: f64,
    mode: SplitMode,
    samples: usize,
    seed: u64,
    score: &dyn ScoreFunction,
    solver: SolverOptions,
) -> Result<SplitSweep> {
    use rand::Rng;
    let r = w.ncols();
    if r == 0 || r > 64 {
        return Err(Error::InvalidArgument(format!("sampled sweep supports 1 to 64 sources, got {r}")));
    }
    let full = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::with_capacity(samples);
    while masks.len() < samples {
        let m = rng.random::<u64>() & full;
        if m == 0 || (mode == SplitMode::ProperOnly && m == full) {
            if r == 1 && mode == SplitMode::ProperOnly {
                return Err(Error::InvalidArgument("a single source has no proper split".into()));
            }
            continue;
        }
        masks.push(m);
    }
    let rows: Result<Vec<SplitRow>> = masks.into_par_iter().map(|m| split_row(w, m, g, score, solver)).collect();
    Ok(finish_sweep(rows?))
}

/// Largest admissible noise levels for each algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseBounds {
    pub lin: f64,
    pub lq: f64,
    pub bf: f64,
    /// Set when `β^LQ² ≤ M²`, in which case `lq` is reported as 0.
    pub lq_undefined: bool,
}

/// Scalar inputs of the noise bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub mu: f64,
    pub l: f64,
    pub k_w: f64,
    pub k_pi2: f64,
    pub alpha_w: f64,
    pub alpha_pi2: f64,
    pub alpha_pi4: f64,
    pub beta_lin: f64,
    pub beta_lq: f64,
    /// Slack constant of the LQ bound.
    pub m: f64,
}

/// Admissible noise for SNPALQ on linear mixtures.
pub fn lin_bound(c: &BoundInputs) -> f64 {
    let (mu, l, k, beta, alpha) = (c.mu, c.l, c.k_w, c.beta_lin, c.alpha_pi2);
    if !(beta > 0.0) || !(alpha > 0.0) || !(k > 0.0) {
        return 0.0;
    }
    let ratio = l.powf(1.5) / mu.powf(1.5);
    let cc = 1.0 + 144.0 * k * k / (beta * beta) * ratio;
    let lead = (2.0 * l + mu) / (2.0 * mu) + k;
    let terms = [
        cc * beta * beta * mu.powf(1.5) / (144.0 * k * l.powf(1.5)),
        alpha * mu / (2.0 * (l + mu)),
        lead + (lead * lead + alpha).sqrt(),
        -1.0 + (1.0 + beta * beta * mu / (96.0 * k * l)).sqrt(),
        (1.0 + k).sqrt() - 1.0,
        k,
    ];
    terms.iter().copied().fold(f64::INFINITY, f64::min) / cc
}

/// Admissible noise for SNPALQ on LQ mixtures; `None` when `β^LQ² ≤ M²`.
pub fn lq_bound(c: &BoundInputs) -> Option<f64> {
    let (mu, l, kw, kp, beta, m) = (c.mu, c.l, c.k_w, c.k_pi2, c.beta_lq, c.m);
    if beta * beta <= m * m {
        return None;
    }
    if !(beta > 0.0) || !(c.alpha_pi2 > 0.0) || !(kp > 0.0) {
        return Some(0.0);
    }
    let l32 = l.powf(1.5);
    let m32 = mu.powf(1.5);
    let ch = 1.0 + 40.0 * kp * kp / (beta * beta - m * m) * l32 / m32;
    let a = 40.0 * l32 + 16.0 * m32 * ch * kw;
    let mb = m.min(beta).powi(2);
    let terms = [
        (-a + (a * a + 32.0 * mu.powi(3) * ch * ch * beta * beta / kp).sqrt()) / (16.0 * m32 * ch),
        m32 * ch * beta * beta / (kp * (40.0 * l32 + 8.0 * ch * m32)),
        mb / (8.0 * kp),
        (kw * kw + mb / (8.0 * kp)).sqrt() - kw,
    ];
    Some(terms.iter().copied().fold(f64::INFINITY, f64::min) / ch)
}

/// Largest `ε` with `4 √((2/μ)(d(ε) + ε L (2K + ε))) < α_W(W)`, where `K` is
/// `K(Π₂(W))`, an upper bound on the column norms of noiseless data.
pub fn bf_bound(c: &BoundInputs) -> f64 {
    if !(c.alpha_w > 0.0) || !(c.alpha_pi4 > 0.0) {
        return 0.0;
    }
    let k = c.k_pi2;
    let violates = |eps: f64| {
        let d = eps * exclusion_factor(eps, k, c.mu, c.l, c.alpha_pi4);
        2.0 * cluster_radius(eps, d, k, c.mu, c.l) >= c.alpha_w
    };
    let mut hi = 1.0;
    while !violates(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if violates(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Evaluates all three bounds from precomputed constants.
pub fn bounds_from_inputs(c: &BoundInputs) -> NoiseBounds {
    let lq = lq_bound(c);
    NoiseBounds { lin: lin_bound(c), lq: lq.unwrap_or(0.0), bf: bf_bound(c), lq_undefined: lq.is_none() }
}

/// Full set of computed quantities for a source matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryReport {
    pub r: usize,
    pub model: MixingModel,
    pub g: f64,
    pub alpha_w: f64,
    pub alpha_pi2: f64,
    pub alpha_pi4: f64,
    pub nu: f64,
    pub gamma: f64,
    /// `ω` and `Ω` of `W`, i.e. of the residuals before any extraction.
    pub omega: f64,
    pub big_omega: f64,
    pub beta_lin: f64,
    pub beta_lq: f64,
    pub k_w: f64,
    pub k_pi2: f64,
    pub m: f64,
    pub eps_bound_lin: f64,
    pub eps_bound_lq: f64,
    pub eps_bound_bf: f64,
    pub lq_bound_undefined: bool,
    /// `L < μ G²`, required by the LQ statements.
    pub lq_constants_admissible: bool,
    /// Share of splits satisfying the recovery condition, when computed.
    pub split_fraction: Option<f64>,
    #[serde(skip)]
    pub splits: Vec<SplitRow>,
}

/// Computes every quantity of [`TheoryReport`]. Splits are enumerated when
/// `with_splits` is set and `r` allows it.
pub fn noise_bounds(
    w: &DMatrix<f64>,
    cfg: &TheoryConfig,
    model: MixingModel,
    score: &dyn ScoreFunction,
) -> Result<NoiseBounds> {
    let report = theory_report(w, cfg, model, score, false)?;
    Ok(NoiseBounds {
        lin: report.eps_bound_lin,
        lq: report.eps_bound_lq,
        bf: report.eps_bound_bf,
        lq_undefined: report.lq_bound_undefined,
    })
}

pub fn theory_report(
    w: &DMatrix<f64>,
    cfg: &TheoryConfig,
    model: MixingModel,
    score: &dyn ScoreFunction,
    with_splits: bool,
) -> Result<TheoryReport> {
    cfg.validate()?;
    let solver = cfg.solver;
    let (mu, l) = (score.mu(), score.lipschitz());
    let k_w = max_col_norm(w)?;
    let k_pi2 = max_col_norm(extend(w, model, 2)?.matrix())?;
    let alpha_w_v = alpha_w(w, solver)?;
    let alpha_pi2 = alpha_pi(w, model, 2, solver)?;
    let alpha_pi4 = alpha_pi(w, model, 4, solver)?;
    let gaps = residual_gaps(w, model, cfg.g, score, solver)?;
    let m = cfg.m.unwrap_or(gaps.beta_lq * std::f64::consts::FRAC_1_SQRT_2);
    let inputs = BoundInputs {
        mu,
        l,
        k_w,
        k_pi2,
        alpha_w: alpha_w_v,
        alpha_pi2,
        alpha_pi4,
        beta_lin: gaps.beta_lin,
        beta_lq: gaps.beta_lq,
        m,
    };
    let bounds = bounds_from_inputs(&inputs);
    let (split_fraction, splits) = if with_splits && w.ncols() <= MAX_EXHAUSTIVE_SOURCES {
        let sweep = split_sweep(w, cfg.g, SplitMode::All, score, solver)?;
        (Some(sweep.fraction), sweep.rows)
    } else {
        (None, Vec::new())
    };
    Ok(TheoryReport {
        r: w.ncols(),
        model,
        g: cfg.g,
        alpha_w: alpha_w_v,
        alpha_pi2,
        alpha_pi4,
        nu: gaps.nu,
        gamma: gaps.gamma,
        omega: omega(w),
        big_omega: big_omega(w, mu, l, cfg.g),
        beta_lin: gaps.beta_lin,
        beta_lq: gaps.beta_lq,
        k_w,
        k_pi2,
        m,
        eps_bound_lin: bounds.lin,
        eps_bound_lq: bounds.lq,
        eps_bound_bf: bounds.bf,
        lq_bound_undefined: bounds.lq_undefined,
        lq_constants_admissible: l < mu * cfg.g * cfg.g,
        split_fraction,
        splits,
    })
}

//! Projection onto the convex hull of a dictionary and the origin.
//!
//! For a dictionary `A` and a score `f`, [`hull_project`] solves
//! `min_{h ∈ Δ} f(x − A h)` with `Δ = {h ≥ 0, Σ h ≤ 1}` and returns the
//! coefficients together with the residual `R_A(x) = x − A h`.
//!
//! Two solvers are available. For quadratic scores the default is a primal
//! active-set method over the bound constraints and the sum constraint, whose
//! subproblems are least-squares solves on a face of `Δ`; it terminates at
//! the exact minimiser up to rounding. The other is an accelerated projected
//! gradient method with gradient-based adaptive restart, used for general
//! scores and as a fallback. For quadratic scores its iterations run on the
//! Gram matrix `AᵀA` and are interleaved with least-squares face steps, kept
//! only when feasible and not worse.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Score used for column selection and projection.
///
/// Implementations must be `μ`-strongly convex with an `L`-Lipschitz gradient
/// and vanish only at the origin.
pub trait ScoreFunction: Send + Sync {
    fn evaluate(&self, v: &[f64]) -> f64;

    fn gradient(&self, v: &[f64], out: &mut [f64]);

    /// Strong convexity constant `μ`.
    fn mu(&self) -> f64;

    /// Lipschitz constant `L` of the gradient.
    fn lipschitz(&self) -> f64;

    /// `Some(c)` when the score is exactly `c‖v‖²`, which enables the Gram
    /// fast path and the least-squares face step.
    fn quadratic_scale(&self) -> Option<f64> {
        None
    }
}

/// `f(v) = ‖v‖₂²`, with `μ = L = 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SquaredEuclidean;

impl ScoreFunction for SquaredEuclidean {
    fn evaluate(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = 2.0 * x;
        }
    }

    fn mu(&self) -> f64 {
        2.0
    }

    fn lipschitz(&self) -> f64 {
        2.0
    }

    fn quadratic_scale(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Inner solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Exact active-set method for quadratic scores; other scores fall back
    /// to `Accelerated`.
    #[default]
    ActiveSet,
    /// Accelerated projected gradient.
    Accelerated,
}

/// Inner solver settings.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Iteration cap of the accelerated method.
    pub max_iterations: usize,
    /// Stop once an iteration moves the coefficients by less than this.
    pub relative_tolerance: f64,
    /// Adaptive momentum restart.
    pub restart: bool,
    /// Least-squares step on the detected face (quadratic scores only).
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::ActiveSet,
            max_iterations: 500,
            relative_tolerance: 1e-9,
            restart: true,
            polish: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::InvalidArgument("relative_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Settings used for reported constants.
    pub fn tight() -> Self {
        Self { max_iterations: 5000, relative_tolerance: 1e-10, ..Self::default() }
    }
}

/// Outcome of one projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    /// Coefficients `h ∈ Δ` (length equals the dictionary size).
    pub coefficients: DVector<f64>,
    /// `x − A h`.
    pub residual: DVector<f64>,
    /// `f(residual)`.
    pub score: f64,
    /// Gradient iterations, or face solves for the active-set method.
    pub iterations: usize,
    pub converged: bool,
}

impl ProjectionResult {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Euclidean projection onto `Δ = {x ≥ 0, Σ x ≤ 1}`.
pub fn project_delta(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if out.iter().sum::<f64>() <= 1.0 {
        return out;
    }
    // Sorted-threshold projection onto {x ≥ 0, Σ x = 1}.
    let mut sorted = out.clone();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in out.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    out
}

fn project_delta_in_place(v: &mut [f64]) {
    let p = project_delta(v);
    v.copy_from_slice(&p);
}

/// Reusable projector onto the hull of one dictionary.
///
/// Precomputes the step size (and the Gram matrix for quadratic scores) so
/// that many columns can be projected onto the same dictionary.
pub struct HullProjector<'a> {
    dictionary: &'a DMatrix<f64>,
    score: &'a dyn ScoreFunction,
    opts: SolverOptions,
    gram: Option<DMatrix<f64>>,
    step: f64,
}

/// Above this many columns the iterations multiply by `A` directly instead of
/// by the Gram matrix.
const GRAM_MAX_COLUMNS: usize = 256;

/// Iterations before the first face step.
const FIRST_BURST: usize = 16;

impl<'a> HullProjector<'a> {
    pub fn new(dictionary: &'a DMatrix<f64>, score: &'a dyn ScoreFunction, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        if dictionary.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dictionary".into()));
        }
        let k = dictionary.ncols();
        let (gram, step) = if k == 0 {
            (None, 0.0)
        } else {
            let sigma_max_sq = largest_gram_eigenvalue(dictionary);
            let lh = score.lipschitz() * sigma_max_sq * (1.0 + 1e-10);
            let step = if lh > 0.0 { 1.0 / lh } else { 0.0 };
            let gram = match score.quadratic_scale() {
                Some(_) if k <= GRAM_MAX_COLUMNS => Some(dictionary.tr_mul(dictionary)),
                _ => None,
            };
            (gram, step)
        };
        Ok(Self { dictionary, score, opts, gram, step })
    }

    pub fn dictionary(&self) -> &DMatrix<f64> {
        self.dictionary
    }

    pub fn project(&self, x: &[f64]) -> Result<ProjectionResult> {
        self.project_from(x, None)
    }

    /// Projection started from `start` (clipped into `Δ`) instead of `h = 0`.
    pub fn project_from(&self, x: &[f64], start: Option<&[f64]>) -> Result<ProjectionResult> {
        let a = self.dictionary;
        if x.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} entries, dictionary has {} rows",
                x.len(),
                a.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("projected vector".into()));
        }
        let k = a.ncols();
        if k == 0 {
            return Ok(ProjectionResult {
                coefficients: DVector::zeros(0),
                residual: DVector::from_column_slice(x),
                score: self.score.evaluate(x),
                iterations: 0,
                converged: true,
            });
        }
        let xv = DVector::from_column_slice(x);
        let mut h = match start {
            Some(s) if s.len() == k => project_delta(s),
            Some(s) => {
                return Err(Error::DimensionMismatch(format!(
                    "warm start has {} entries, dictionary has {k} columns",
                    s.len()
                )))
            }
            None => vec![0.0; k],
        };
        if self.opts.method == SolverMethod::ActiveSet {
            if let Some((h, iterations)) = self.active_set(&xv, &h) {
                let (residual, score) = self.finish(&xv, &h);
                return Ok(ProjectionResult {
                    coefficients: DVector::from_vec(h),
                    residual,
                    score,
                    iterations,
                    converged: true,
                });
            }
        }
        let mut total_iters = 0;
        let mut converged = false;
        let (mut best_r, mut best_f) = self.finish(&xv, &h);
        let mut best_h = h.clone();

        let polish = self.opts.polish && self.score.quadratic_scale().is_some();
        // With polishing, the face step is tried after short bursts of
        // iterations whose length doubles each time.
        let mut burst = if polish { FIRST_BURST } else { self.opts.max_iterations };
        let mut remaining = self.opts.max_iterations;
        while remaining > 0 {
            let (h_new, iters, conv) = self.accelerated(&xv, &h, burst.min(remaining));
            total_iters += iters;
            remaining -= iters;
            h = h_new;
            let (r, f) = self.finish(&xv, &h);
            if f <= best_f {
                (best_r, best_f, best_h) = (r, f, h.clone());
            }
            if polish {
                if let Some(face) = self.face_step(&xv, &h) {
                    let (r, f) = self.finish(&xv, &face);
                    if f <= best_f {
                        (best_r, best_f, best_h) = (r, f, face.clone());
                        if self.is_stationary(&best_r, &best_h) {
                            converged = true;
                            break;
                        }
                        h = face;
                    }
                }
            }
            if conv {
                converged = true;
                break;
            }
            burst *= 2;
        }
        Ok(ProjectionResult {
            coefficients: DVector::from_vec(best_h),
            residual: best_r,
            score: best_f,
            iterations: total_iters,
            converged,
        })
    }

    /// Residual and score at `h`.
    fn finish(&self, x: &DVector<f64>, h: &[f64]) -> (DVector<f64>, f64) {
        let hv = DVector::from_column_slice(h);
        let residual = x - self.dictionary * hv;
        let score = self.score.evaluate(residual.as_slice());
        (residual, score)
    }

    fn gradient_at(&self, x: &DVector<f64>, atx: Option<&DVector<f64>>, y: &[f64], out: &mut DVector<f64>) {
        let yv = DVector::from_column_slice(y);
        match (&self.gram, atx, self.score.quadratic_scale()) {
            (Some(g), Some(b), Some(c)) => {
                // ∇ = 2c (G y − Aᵀx)
                *out = (g * yv - b) * (2.0 * c);
            }
            _ => {
                let r = x - self.dictionary * yv;
                let mut fg = vec![0.0; r.len()];
                self.score.gradient(r.as_slice(), &mut fg);
                let fg = DVector::from_vec(fg);
                *out = -self.dictionary.tr_mul(&fg);
            }
        }
    }

    fn accelerated(&self, x: &DVector<f64>, start: &[f64], budget: usize) -> (Vec<f64>, usize, bool) {
        let k = start.len();
        let atx = self.gram.as_ref().map(|_| self.dictionary.tr_mul(x));
        let mut h = start.to_vec();
        let mut y = h.clone();
        let mut theta = 1.0f64;
        let mut grad = DVector::zeros(k);
        let tol = self.opts.relative_tolerance;
        for it in 1..=budget {
            self.gradient_at(x, atx.as_ref(), &y, &mut grad);
            let mut h_new: Vec<f64> = y.iter().zip(grad.iter()).map(|(yi, gi)| yi - self.step * gi).collect();
            project_delta_in_place(&mut h_new);

            let mut step_sq = 0.0;
            let mut restart_dot = 0.0;
            for i in 0..k {
                let d = h_new[i] - y[i];
                step_sq += d * d;
                restart_dot += (y[i] - h_new[i]) * (h_new[i] - h[i]);
            }
            let h_norm = h_new.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step_sq.sqrt() <= tol * h_norm.max(1.0) {
                return (h_new, it, true);
            }
            let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            if self.opts.restart && restart_dot > 0.0 {
                theta = 1.0;
                y.copy_from_slice(&h_new);
            } else {
                let beta = (theta - 1.0) / theta_new;
                for i in 0..k {
                    y[i] = h_new[i] + beta * (h_new[i] - h[i]);
                }
                theta = theta_new;
            }
            h = h_new;
        }
        (h, budget, false)
    }

    /// Exact minimiser for quadratic scores.
    ///
    /// Primal active-set method over the constraints `h_i ≥ 0` and
    /// `Σ h ≤ 1`, started from the feasible point `start`; each subproblem is
    /// a least-squares solve on the current face. Returns `None` for
    /// non-quadratic scores or when the iteration cap is hit.
    fn active_set(&self, x: &DVector<f64>, start: &[f64]) -> Option<(Vec<f64>, usize)> {
        let c = self.score.quadratic_scale()?;
        let a = self.dictionary;
        let k = a.ncols();
        let col_max = a.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
        let mut h = start.to_vec();
        let mut free: Vec<bool> = h.iter().map(|v| *v > 0.0).collect();
        let mut sum_active = 1.0 - h.iter().sum::<f64>() <= 1e-12;
        // Releases that failed to decrease the objective from the current
        // point; the last slot stands for the sum constraint.
        let mut tabu = vec![false; k + 1];
        let mut undo: Option<(Vec<f64>, Vec<bool>, bool, f64, usize)> = None;
        let mut solves = 0;
        let cap = 4 * k + 50;

        loop {
            loop {
                let support: Vec<usize> = (0..k).filter(|&i| free[i]).collect();
                if support.is_empty() {
                    sum_active = false;
                    break;
                }
                solves += 1;
                if solves > cap {
                    return None;
                }
                let z = self.solve_face(x, &support, sum_active, &h)?;
                let z_sum: f64 = support.iter().map(|&i| z[i]).sum();
                if support.iter().all(|&i| z[i] > 0.0) && (sum_active || z_sum <= 1.0) {
                    h = z;
                    break;
                }
                // Walk towards `z` until the first constraint blocks.
                let mut step = 1.0f64;
                let mut hits_sum = false;
                for &i in &support {
                    if z[i] <= 0.0 {
                        step = step.min(h[i] / (h[i] - z[i]));
                    }
                }
                if !sum_active && z_sum > 1.0 {
                    let h_sum: f64 = h.iter().sum();
                    let s = ((1.0 - h_sum) / (z_sum - h_sum)).max(0.0);
                    if s <= step {
                        step = s;
                        hits_sum = true;
                    }
                }
                let step = step.clamp(0.0, 1.0);
                for &i in &support {
                    h[i] += step * (z[i] - h[i]);
                }
                sum_active |= hits_sum;
                for &i in &support {
                    if h[i] <= 0.0 || (z[i] <= 0.0 && h[i] <= 1e-15) {
                        h[i] = 0.0;
                        free[i] = false;
                    }
                }
            }
            // Only strict decrease counts as progress; otherwise undo the
            // last release and do not try it again from this point.
            if let Some((h0, free0, sum0, f0, slot)) = undo.take() {
                if self.finish(x, &h).1 < f0 {
                    tabu.iter_mut().for_each(|t| *t = false);
                } else {
                    (h, free, sum_active) = (h0, free0, sum0);
                    tabu[slot] = true;
                }
            }

            let (r, _) = self.finish(x, &h);
            let g = a.tr_mul(&r) * (-2.0 * c);
            // Relative to the residual, floored near the rounding level of `g`.
            let tol = (2.0 * c * col_max * (1e-12 * r.norm()).max(1e-14 * x.norm())).max(f64::MIN_POSITIVE);
            let free_idx: Vec<usize> = (0..k).filter(|&i| free[i]).collect();
            let lambda = if sum_active && !free_idx.is_empty() {
                -free_idx.iter().map(|&i| g[i]).sum::<f64>() / free_idx.len() as f64
            } else {
                0.0
            };
            // Most negative multiplier; `None` stands for the sum constraint.
            let mut release: Option<(Option<usize>, f64)> = None;
            if sum_active && lambda < -tol && !tabu[k] {
                release = Some((None, lambda));
            }
            for i in (0..k).filter(|&i| !free[i] && !tabu[i]) {
                let mu = g[i] + lambda;
                if mu < -tol && release.is_none_or(|(_, best)| mu < best) {
                    release = Some((Some(i), mu));
                }
            }
            let Some((which, _)) = release else { return Some((h, solves)) };
            undo = Some((h.clone(), free.clone(), sum_active, self.finish(x, &h).1, which.unwrap_or(k)));
            match which {
                None => sum_active = false,
                Some(i) => free[i] = true,
            }
        }
    }

    /// Least-squares coefficients on `support`, with `Σ = 1` imposed when
    /// `sum_active`; the result may leave `Δ`.
    fn solve_face(&self, x: &DVector<f64>, support: &[usize], sum_active: bool, h: &[f64]) -> Option<Vec<f64>> {
        let a = self.dictionary;
        let mut z = vec![0.0; a.ncols()];
        if sum_active {
            let pivot = *support.iter().max_by(|&&i, &&j| h[i].total_cmp(&h[j]).then(j.cmp(&i)))?;
            let rest: Vec<usize> = support.iter().copied().filter(|&i| i != pivot).collect();
            let target = x - a.column(pivot);
            let mut zp = 1.0;
            if !rest.is_empty() {
                let mut b = a.select_columns(&rest);
                for mut col in b.column_iter_mut() {
                    col -= a.column(pivot);
                }
                let sol = least_squares(b, &target)?;
                for (&i, v) in rest.iter().zip(sol.iter()) {
                    z[i] = *v;
                    zp -= v;
                }
            }
            z[pivot] = zp;
        } else {
            let b = a.select_columns(support);
            let sol = least_squares(b, x)?;
            for (&i, v) in support.iter().zip(sol.iter()) {
                z[i] = *v;
            }
        }
        Some(z)
    }

    /// Least-squares solve on the face of `Δ` containing `h`.
    fn face_step(&self, x: &DVector<f64>, h: &[f64]) -> Option<Vec<f64>> {
        let support: Vec<usize> = (0..h.len()).filter(|&i| h[i] > 0.0).collect();
        if support.is_empty() {
            return None;
        }
        let total: f64 = h.iter().sum();
        let sum_active = 1.0 - total <= 1e-9;
        let mut z = self.solve_face(x, &support, sum_active, h)?;
        // Accept rounding-level infeasibility only.
        let slack = 1e-12;
        if z.iter().any(|v| *v < -slack) {
            return None;
        }
        for v in z.iter_mut() {
            *v = v.max(0.0);
        }
        let s: f64 = z.iter().sum();
        if s > 1.0 + slack {
            return None;
        }
        if s > 1.0 {
            for v in z.iter_mut() {
                *v /= s;
            }
        }
        Some(z)
    }

    /// First-order optimality of `h` for a quadratic score.
    fn is_stationary(&self, residual: &DVector<f64>, h: &[f64]) -> bool {
        let Some(c) = self.score.quadratic_scale() else { return false };
        let g = self.dictionary.tr_mul(residual) * (-2.0 * c);
        let col_max = self.dictionary.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
        let tol = 1e-9 * (2.0 * c * residual.norm() * col_max).max(f64::MIN_POSITIVE);
        let support: Vec<usize> = (0..h.len()).filter(|&i| h[i] > 0.0).collect();
        let sum_active = 1.0 - h.iter().sum::<f64>() <= 1e-9;
        // Multiplier of the sum constraint.
        let lambda = if sum_active && !support.is_empty() {
            -support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64
        } else {
            0.0
        };
        lambda >= -tol
            && support.iter().all(|&i| (g[i] + lambda).abs() <= tol)
            && g.iter().all(|gi| gi + lambda >= -tol)
    }
}

fn least_squares(b: DMatrix<f64>, target: &DVector<f64>) -> Option<DVector<f64>> {
    if b.nrows() >= b.ncols() {
        let qr = b.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diag_min = r.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if diag_min > 1e-8 * diag_max {
            let mut qtb = target.clone();
            qr.q_tr_mul(&mut qtb);
            if let Some(sol) = r.solve_upper_triangular(&qtb.rows(0, r.ncols()).into_owned()) {
                return Some(sol);
            }
        }
    }
    let svd = b.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Some(DVector::zeros(svd.singular_values.len()));
    }
    let eps = smax * f64::EPSILON * (target.len().max(svd.singular_values.len()) as f64);
    svd.solve(target, eps).ok()
}

/// Largest eigenvalue of `AᵀA`, i.e. `σ_max(A)²`.
fn largest_gram_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let g = if a.ncols() <= a.nrows() { a.tr_mul(a) } else { a * a.transpose() };
    g.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
}

/// Projects `x` onto the hull of the columns of `a` and the origin.
pub fn hull_project(
    x: &[f64],
    a: &DMatrix<f64>,
    score: &dyn ScoreFunction,
    opts: SolverOptions,
) -> Result<ProjectionResult> {
    HullProjector::new(a, score, opts)?.project(x)
}

/// Projects every column of `x`, in parallel; results are in column order.
pub fn project_columns(
    x: &DMatrix<f64>,
    a: &DMatrix<f64>,
    score: &dyn ScoreFunction,
    opts: SolverOptions,
) -> Result<Vec<ProjectionResult>> {
    if x.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("data has {} rows, dictionary has {}", x.nrows(), a.nrows())));
    }
    let proj = HullProjector::new(a, score, opts)?;
    (0..x.ncols()).into_par_iter().map(|j| proj.project(x.column(j).as_slice())).collect()
}

/// Column-wise residuals `R_A(X)`; same shape as `x`.
pub fn residual_matrix(
    x: &DMatrix<f64>,
    a: &DMatrix<f64>,
    score: &dyn ScoreFunction,
    opts: SolverOptions,
) -> Result<DMatrix<f64>> {
    let results = project_columns(x, a, score, opts)?;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (j, r) in results.iter().enumerate() {
        out.set_column(j, &r.residual);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn delta_projection_examples() {
        assert!(close(&project_delta(&[0.2, 0.3]), &[0.2, 0.3], 0.0));
        assert!(close(&project_delta(&[0.8, 0.8]), &[0.5, 0.5], 1e-15));
        assert!(close(&project_delta(&[-1.0, 0.5]), &[0.0, 0.5], 0.0));
        assert!(close(&project_delta(&[3.0, -2.0, 0.0]), &[1.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn hull_examples() {
        let s = SquaredEuclidean;
        let opts = SolverOptions::default();
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);

        let p = hull_project(&[0.5, 0.0], &a, &s, opts).unwrap();
        assert!((p.coefficients[0] - 0.5).abs() < 1e-12);
        assert!(p.residual.norm() < 1e-12);

        let p = hull_project(&[2.0, 0.0], &a, &s, opts).unwrap();
        assert!((p.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((p.residual_norm() - 1.0).abs() < 1e-12);

        let a2 = DMatrix::identity(2, 2);
        let p = hull_project(&[0.3, 0.4], &a2, &s, opts).unwrap();
        assert!(close(p.coefficients.as_slice(), &[0.3, 0.4], 1e-12));
        assert!(p.residual.norm() < 1e-12);
    }

    #[test]
    fn empty_dictionary_is_identity() {
        let a = DMatrix::<f64>::zeros(3, 0);
        let p = hull_project(&[1.0, 2.0, 3.0], &a, &SquaredEuclidean, SolverOptions::default()).unwrap();
        assert_eq!(p.residual.as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(p.coefficients.len(), 0);
        assert_eq!(p.score, 14.0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::identity(2, 2);
        let s = SquaredEuclidean;
        assert!(matches!(
            hull_project(&[1.0, 2.0, 3.0], &a, &s, SolverOptions::default()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(hull_project(&[f64::NAN, 0.0], &a, &s, SolverOptions::default()), Err(Error::NonFinite(_))));
        let bad = SolverOptions { max_iterations: 0, ..SolverOptions::default() };
        assert!(hull_project(&[1.0, 0.0], &a, &s, bad).is_err());
    }

    #[test]
    fn residual_matrix_of_dictionary_is_zero() {
        let a = DMatrix::from_column_slice(3, 3, &[0.9, 0.1, 0.2, 0.1, 0.8, 0.3, 0.2, 0.2, 0.7]);
        let r = residual_matrix(&a, &a, &SquaredEuclidean, SolverOptions::default()).unwrap();
        for col in r.column_iter() {
            assert!(col.norm_squared() <= 1e-18);
        }
    }

    #[test]
    fn duplicated_dictionary_columns() {
        // Rank-deficient dictionary with an exact duplicate.
        let a = DMatrix::from_column_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let x = [0.7, 0.3, 0.4];
        let p = hull_project(&x, &a, &SquaredEuclidean, SolverOptions::default()).unwrap();
        assert!(p.score <= 1e-24, "score {}", p.score);
        let h = p.coefficients.as_slice();
        assert!(h.iter().all(|v| *v >= 0.0) && h.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}

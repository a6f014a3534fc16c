//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use lqunmix::mixmodel::{extend, DataMatrix, MixingModel};
use lqunmix::projector::{hull_project, ScoreFunction, SolverMethod, SolverOptions, SquaredEuclidean};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f(v) = Σ v_i² + ½(√(1+v_i²) − 1)`: strongly convex with `μ = 2`, `L = 2.5`,
/// and not a multiple of `‖v‖²`, so the projector takes its generic path.
pub struct Bumpy;

impl ScoreFunction for Bumpy {
    fn evaluate(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x + 0.5 * ((1.0 + x * x).sqrt() - 1.0)).sum()
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = 2.0 * x + 0.5 * x / (1.0 + x * x).sqrt();
        }
    }

    fn mu(&self) -> f64 {
        2.0
    }

    fn lipschitz(&self) -> f64 {
        2.5
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.random_range(lo..hi))
}

fn objective(x: &[f64], a: &DMatrix<f64>, h: &[f64], score: &dyn ScoreFunction) -> f64 {
    let r: Vec<f64> = (0..x.len()).map(|i| x[i] - (0..h.len()).map(|j| a[(i, j)] * h[j]).sum::<f64>()).collect();
    score.evaluate(&r)
}

fn grid_points(k: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(i: usize, left: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if i == cur.len() {
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, n, cur, out);
        }
    }
    rec(0, n, n, &mut cur, &mut out);
    out
}

/// Largest `t ≥ 0` with `h + t d` in `Δ`.
fn max_step(h: &[f64], d: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for (hi, di) in h.iter().zip(d) {
        if *di < 0.0 {
            t = t.min(hi / -di);
        }
    }
    let ds: f64 = d.iter().sum();
    if ds > 0.0 {
        t = t.min((1.0 - h.iter().sum::<f64>()).max(0.0) / ds);
    }
    t
}

/// Minimum of `f(x − A h)` over `Δ` for at most three columns: a simplex grid
/// followed by a pattern search along the edge directions of `Δ`.
pub fn grid_refine(x: &[f64], a: &DMatrix<f64>, score: &dyn ScoreFunction) -> (f64, Vec<f64>) {
    let k = a.ncols();
    assert!((1..=3).contains(&k), "oracle handles 1 to 3 columns");
    let n = [0, 2000, 200, 60][k];
    let mut best = (f64::INFINITY, vec![0.0; k]);
    for h in grid_points(k, n) {
        let v = objective(x, a, &h, score);
        if v < best.0 {
            best = (v, h);
        }
    }
    let mut dirs = Vec::new();
    for i in 0..k {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; k];
            d[i] = s;
            dirs.push(d);
        }
        for j in 0..k {
            if i != j {
                let mut d = vec![0.0; k];
                d[i] = 1.0;
                d[j] = -1.0;
                dirs.push(d);
            }
        }
    }
    let (mut fbest, mut h) = best;
    let mut step = 1.0 / n as f64;
    while step > 1e-14 {
        let mut improved = false;
        for d in &dirs {
            let t = step.min(max_step(&h, d));
            if t <= 0.0 {
                continue;
            }
            let cand: Vec<f64> = h.iter().zip(d).map(|(hi, di)| (hi + t * di).max(0.0)).collect();
            let v = objective(x, a, &cand, score);
            if v < fbest {
                fbest = v;
                h = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fbest, h)
}

/// Exact `min ‖x − A h‖²` over `Δ` by enumerating supports: on every column
/// subset, the least-squares point with the sum free and with the sum fixed at
/// one; the best feasible candidate wins. Exponential in the column count.
pub fn enumerated_score(x: &[f64], a: &DMatrix<f64>) -> f64 {
    let (m, k) = a.shape();
    assert!(k <= 12, "support enumeration is limited to 12 columns");
    let xv = DVector::from_column_slice(x);
    let mut best = xv.norm_squared();
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
        let sub = a.select_columns(&cols);
        let svd = sub.clone().svd(true, true);
        if let Ok(z) = svd.solve(&xv, 1e-13) {
            if z.iter().all(|&v| v >= 0.0) && z.sum() <= 1.0 + 1e-12 {
                best = best.min((&xv - &sub * &z).norm_squared());
            }
        }
        let last = *cols.last().unwrap();
        let anchor = a.column(last);
        if cols.len() == 1 {
            best = best.min((&xv - anchor).norm_squared());
            continue;
        }
        let shifted = DMatrix::from_fn(m, cols.len() - 1, |i, j| a[(i, cols[j])] - anchor[i]);
        if let Ok(y) = shifted.clone().svd(true, true).solve(&(&xv - anchor), 1e-13) {
            if y.iter().all(|&v| v >= 0.0) && y.sum() <= 1.0 + 1e-12 {
                best = best.min((&xv - anchor - &shifted * &y).norm_squared());
            }
        }
    }
    best
}

/// Hull membership, decided without the active-set solver: an accelerated
/// solve bounds the optimum from above by its score and from below through
/// the Frank–Wolfe gap; undecided cases go to [`enumerated_score`].
pub fn in_hull(x: &[f64], dictionary: &DMatrix<f64>) -> bool {
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let tol = 1e-20 * scale;
    let opts = SolverOptions { method: SolverMethod::Accelerated, ..SolverOptions::default() };
    let p = hull_project(x, dictionary, &SquaredEuclidean, opts).unwrap();
    let g = -2.0 * dictionary.tr_mul(&p.residual);
    let gap = g.dot(&p.coefficients) - g.iter().copied().fold(0.0, f64::min);
    if p.score <= tol {
        return true;
    }
    if p.score - gap > tol {
        return false;
    }
    enumerated_score(x, dictionary) <= tol
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every smallest column subset `S` (size at most `max_size`) such that all
/// data columns lie in the hull of `Π₂(X_S)` and the origin.
pub fn exhaustive_generators(x: &DataMatrix, model: MixingModel, max_size: usize) -> Vec<Vec<usize>> {
    let xm = x.as_matrix();
    for size in 1..=max_size {
        let found: Vec<Vec<usize>> = subsets(xm.ncols(), size)
            .into_iter()
            .filter(|s| {
                let dict = extend(&x.select_columns(s), model, 2).unwrap();
                (0..xm.ncols()).all(|j| s.contains(&j) || in_hull(xm.column(j).as_slice(), dict.matrix()))
            })
            .collect();
        if !found.is_empty() {
            return found;
        }
    }
    Vec::new()
}

/// Bottleneck assignment by enumerating every injective map of the smaller
/// side into the larger one.
pub fn brute_bottleneck(sim: &DMatrix<f64>) -> f64 {
    let (rows, cols) = sim.shape();
    let (small, large, at): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if rows <= cols {
        (rows, cols, Box::new(|i, j| sim[(i, j)]))
    } else {
        (cols, rows, Box::new(|i, j| sim[(j, i)]))
    };
    fn rec(
        i: usize,
        small: usize,
        large: usize,
        used: &mut Vec<bool>,
        cur: f64,
        at: &dyn Fn(usize, usize) -> f64,
    ) -> f64 {
        if i == small {
            return cur;
        }
        let mut best = f64::NEG_INFINITY;
        for j in 0..large {
            if !used[j] {
                used[j] = true;
                best = best.max(rec(i + 1, small, large, used, cur.min(at(i, j)), at));
                used[j] = false;
            }
        }
        best
    }
    rec(0, small, large, &mut vec![false; large], f64::INFINITY, &*at)
}

//! Sequential minimal optimization for the soft-margin SVM dual
//!
//!   min  ½ αᵀQα − Σα   s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K_ij
//!
//! using maximal-violating-pair selection for the first index and the
//! second-order gain rule for the second. Stops when the KKT gap
//! `max_{I_up} −y G − min_{I_low} −y G` drops below `tol`.

use rayon::prelude::*;

/// Curvature used when a pair's kernel distance is non-positive.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    /// Final KKT gap.
    pub gap: f64,
    /// Whether the gap fell below tolerance before the iteration cap.
    pub converged: bool,
}

impl DualSolution {
    /// Dual objective `Σα − ½ αᵀQα` (to be maximized).
    pub fn objective(&self, gram: &[Vec<f64>], y: &[f64]) -> f64 {
        dual_objective(&self.alpha, gram, y)
    }
}

pub fn dual_objective(alpha: &[f64], gram: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Full kernel matrix, rows computed in parallel.
pub fn gram_matrix(x: &[Vec<f64>], kernel: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> Vec<Vec<f64>> {
    (0..x.len())
        .into_par_iter()
        .map(|i| x.iter().map(|xj| kernel(&x[i], xj)).collect())
        .collect()
}

pub fn solve(gram: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        // first index: maximal violation in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // second index: best second-order gain in I_low; also track min over I_low
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        if i_sel != usize::MAX {
            let i = i_sel;
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let v = -y[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = gram[i][i] + gram[t][t] - 2.0 * gram[i][t];
                    let gain = -(b * b) / if a > 0.0 { a } else { TAU };
                    if gain < best_gain {
                        best_gain = gain;
                        j_sel = t;
                    }
                }
            }
        }
        gap = gmax - gmin;
        if i_sel == usize::MAX || j_sel == usize::MAX || gap < tol {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (gram[i][i] + gram[j][j] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (gram[i][i] + gram[j][j] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    DualSolution { rho: compute_rho(&alpha, &grad, y, c), alpha, iterations, gap, converged: gap < tol }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else if ub.is_infinite() {
        lb
    } else if lb.is_infinite() {
        ub
    } else {
        (ub + lb) / 2.0
    }
}

//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

/// Exact k-means optimum by enumerating every labeling of `points` into at
/// most `k` groups.
pub fn exhaustive_kmeans_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for j in 0..d {
                sums[l][j] += p[j];
            }
        }
        let mut inertia = 0.0;
        for (p, &l) in points.iter().zip(&labels) {
            for j in 0..d {
                let c = sums[l][j] / counts[l] as f64;
                inertia += (p[j] - c) * (p[j] - c);
            }
        }
        best = best.min(inertia);
        // next labeling in base k
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

/// Dual objective `Σα − ½ Σ α_i α_j y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], gram: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - nu * yi).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // balance is non-increasing in nu
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dense projected-gradient ascent with Nesterov momentum (FISTA) on the
/// soft-margin dual. Returns the best objective reached.
pub fn qp_oracle(gram: &[Vec<f64>], y: &[f64], c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    // Lipschitz constant of the gradient: bound by the max row sum of |Q|.
    let lip = (0..n).map(|i| (0..n).map(|j| q(i, j).abs()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let step = 1.0 / lip;
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = (x.clone(), dual_objective(&x, y, gram));
    for _ in 0..iters {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q(i, j) * z[j]).sum::<f64>()).collect();
        let cand: Vec<f64> = z.iter().zip(&grad).map(|(zi, g)| zi + step * g).collect();
        let next = project(&cand, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        x = next;
        t = t_next;
        let obj = dual_objective(&x, y, gram);
        if obj > best.1 {
            best = (x.clone(), obj);
        }
    }
    best
}

/// Deterministic pseudo-random stream for building test instances.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Fraction of seeds for which `pred` holds, with the per-seed flags.
pub fn seed_votes(flags: &[bool]) -> usize {
    flags.iter().filter(|f| **f).count()
}

//! Soft-margin kernel SVMs with one-against-one multiclass voting.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ActivityLabel;

pub mod smo;

pub use smo::{dual_objective, gram_matrix, DualSolution};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("training data is empty")]
    EmptyInput,
    #[error("non-finite feature at row {row}")]
    NonFiniteFeature { row: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("labels must be -1 or +1")]
    InvalidLabel,
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// RBF width; `None` resolves to `1 / (d · mean per-dimension variance)`
    /// of the training data.
    pub gamma: Option<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { kind: KernelKind::Rbf, gamma: None }
    }
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, gamma: None }
    }

    pub fn rbf(gamma: f64) -> Self {
        Self { kind: KernelKind::Rbf, gamma: Some(gamma) }
    }

    /// Fill in the default gamma from training data.
    pub fn resolve(&self, x: &[Vec<f64>]) -> Result<KernelSpec, SvmError> {
        let gamma = match (self.kind, self.gamma) {
            (KernelKind::Linear, _) => None,
            (KernelKind::Rbf, Some(g)) => Some(g),
            (KernelKind::Rbf, None) => Some(default_gamma(x)),
        };
        if let Some(g) = gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(SvmError::InvalidParameter(format!("gamma {g}")));
            }
        }
        Ok(KernelSpec { kind: self.kind, gamma })
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-self.gamma.unwrap_or(1.0) * d2).exp()
            }
        }
    }
}

/// `1 / (d · mean per-dimension variance)`, falling back to 1 for flat data.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, Vec::len);
    if d == 0 || x.is_empty() {
        return 1.0;
    }
    let n = x.len() as f64;
    let mean_var = (0..d)
        .map(|k| {
            let m = x.iter().map(|r| r[k]).sum::<f64>() / n;
            x.iter().map(|r| (r[k] - m) * (r[k] - m)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 && mean_var.is_finite() {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { kernel: KernelSpec::default(), c: 1.0, tol: 1e-3, max_iter: 10_000_000 }
    }
}

/// One binary machine; positive decision values mean the `+1` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Resolved kernel.
    pub kernel: KernelSpec,
    pub c: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }
}

fn validate_rows(x: &[Vec<f64>]) -> Result<usize, SvmError> {
    let dim = x.first().ok_or(SvmError::EmptyInput)?.len();
    for (row, v) in x.iter().enumerate() {
        if v.len() != dim {
            return Err(SvmError::DimensionMismatch { expected: dim, got: v.len() });
        }
        if v.iter().any(|f| !f.is_finite()) {
            return Err(SvmError::NonFiniteFeature { row });
        }
    }
    Ok(dim)
}

/// Solve the dual for labels in {−1, +1}; exposes the full α vector.
pub fn solve_dual(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelSpec,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(DualSolution, Vec<Vec<f64>>), SvmError> {
    validate_rows(x)?;
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::InvalidLabel);
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(SvmError::SingleClassInput);
    }
    if !(c > 0.0 && c.is_finite()) || tol.is_nan() || tol <= 0.0 {
        return Err(SvmError::InvalidParameter(format!("C {c}, tol {tol}")));
    }
    let gram = gram_matrix(x, |a, b| kernel.eval(a, b));
    Ok((smo::solve(&gram, y, c, tol, max_iter), gram))
}

/// Train one binary machine. `kernel` should already be resolved; an
/// unresolved RBF gamma is resolved from `x`.
pub fn train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelSpec,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BinarySvm, SvmError> {
    validate_rows(x)?;
    let kernel = kernel.resolve(x)?;
    let (sol, _) = solve_dual(x, y, &kernel, c, tol, max_iter)?;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for ((xi, yi), a) in x.iter().zip(y).zip(&sol.alpha) {
        if *a > 0.0 {
            support_vectors.push(xi.clone());
            dual_coef.push(a * yi);
        }
    }
    Ok(BinarySvm { support_vectors, dual_coef, bias: -sol.rho, kernel, c })
}

/// Pairwise machine for classes `classes[first]` (+1) and `classes[second]` (−1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub first: usize,
    pub second: usize,
    pub machine: BinarySvm,
}

/// One-against-one multiclass SVM over the classes present in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoSvm {
    pub classes: Vec<ActivityLabel>,
    pub machines: Vec<PairMachine>,
    pub params: SvmParams,
    pub dim: usize,
}

/// Winner from per-class votes and signed decision sums: most votes, then
/// largest decision sum, then lowest index.
pub fn vote_winner(votes: &[usize], sums: &[f64]) -> usize {
    let mut best = 0;
    for c in 1..votes.len() {
        if votes[c] > votes[best] || (votes[c] == votes[best] && sums[c] > sums[best]) {
            best = c;
        }
    }
    best
}

impl OvoSvm {
    pub fn train(x: &[Vec<f64>], labels: &[ActivityLabel], params: &SvmParams) -> Result<Self, SvmError> {
        let dim = validate_rows(x)?;
        if x.len() != labels.len() {
            return Err(SvmError::DimensionMismatch { expected: x.len(), got: labels.len() });
        }
        let kernel = params.kernel.resolve(x)?;
        let mut classes: Vec<ActivityLabel> = labels.to_vec();
        classes.sort();
        classes.dedup();
        let pairs: Vec<(usize, usize)> = (0..classes.len())
            .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
            .collect();
        let machines = pairs
            .par_iter()
            .map(|&(a, b)| {
                let (mut xs, mut ys) = (Vec::new(), Vec::new());
                for (xi, l) in x.iter().zip(labels) {
                    if *l == classes[a] {
                        xs.push(xi.clone());
                        ys.push(1.0);
                    } else if *l == classes[b] {
                        xs.push(xi.clone());
                        ys.push(-1.0);
                    }
                }
                let machine = train_binary(&xs, &ys, &kernel, params.c, params.tol, params.max_iter)?;
                Ok(PairMachine { first: a, second: b, machine })
            })
            .collect::<Result<Vec<_>, SvmError>>()?;
        Ok(Self { classes, machines, params: SvmParams { kernel, ..*params }, dim })
    }

    /// Votes and signed decision sums per class.
    pub fn votes(&self, x: &[f64]) -> Result<(Vec<usize>, Vec<f64>), SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let k = self.classes.len();
        let mut votes = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for m in &self.machines {
            let d = m.machine.decision(x);
            if d > 0.0 {
                votes[m.first] += 1;
            } else {
                votes[m.second] += 1;
            }
            sums[m.first] += d;
            sums[m.second] -= d;
        }
        Ok((votes, sums))
    }

    pub fn predict(&self, x: &[f64]) -> Result<ActivityLabel, SvmError> {
        let (votes, sums) = self.votes(x)?;
        Ok(self.classes[vote_winner(&votes, &sums)])
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<ActivityLabel>, SvmError> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), SvmError> {
        let file = SvmModelFile { format: SVM_FORMAT.into(), version: SVM_VERSION, model: self.clone() };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SvmError> {
        let file: SvmModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.format != SVM_FORMAT || file.version != SVM_VERSION {
            return Err(SvmError::BadModelFile(format!("{} v{}", file.format, file.version)));
        }
        Ok(file.model)
    }
}

/// `predict_ovo` in free-function form.
pub fn predict_ovo(model: &OvoSvm, x: &[f64]) -> Result<ActivityLabel, SvmError> {
    model.predict(x)
}

const SVM_FORMAT: &str = "hrgroup-ovo-svm";
const SVM_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SvmModelFile {
    format: String,
    version: u32,
    model: OvoSvm,
}

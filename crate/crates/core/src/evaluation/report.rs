//! Evaluation reports and their JSON/CSV exports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use super::EvalError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub held_out: String,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

/// Settings that produced a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub window: usize,
    pub stride: usize,
    pub features: Option<String>,
    pub standardization: String,
    pub model: String,
    pub split: String,
    pub clusters: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// Pooled over all folds.
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub confusion_matrix: ConfusionMatrix,
    pub folds: Vec<FoldRecord>,
    pub config: ConfigEcho,
}

impl EvalReport {
    pub fn from_folds(folds: Vec<(FoldRecord, ConfusionMatrix)>, config: ConfigEcho) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (_, m) in &folds {
            cm.merge(m);
        }
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            accuracy: cm.accuracy(),
            balanced_accuracy: cm.balanced_accuracy(),
            confusion_matrix: cm,
            folds: folds.into_iter().map(|(r, _)| r).collect(),
            config,
        }
    }

    /// Mean of the per-fold balanced accuracies.
    pub fn mean_fold_balanced_accuracy(&self) -> f64 {
        mean(self.folds.iter().map(|f| f.balanced_accuracy))
    }

    pub fn mean_fold_accuracy(&self) -> f64 {
        mean(self.folds.iter().map(|f| f.accuracy))
    }

    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// One row per fold.
    pub fn write_fold_csv(&self, path: &Path) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["fold", "held_out", "n_train", "n_test", "accuracy", "balanced_accuracy"])?;
        for f in &self.folds {
            w.write_record([
                f.fold.to_string(),
                f.held_out.clone(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.accuracy.to_string(),
                f.balanced_accuracy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

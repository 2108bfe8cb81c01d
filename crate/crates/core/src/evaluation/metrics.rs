//! Confusion matrices and accuracy metrics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::ActivityLabel;

/// 5×5 counts, rows = true label, columns = predicted label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; ActivityLabel::COUNT]; ActivityLabel::COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(truth: &[ActivityLabel], pred: &[ActivityLabel]) -> Self {
        let mut m = Self::default();
        for (t, p) in truth.iter().zip(pred) {
            m.add(*t, *p);
        }
        m
    }

    pub fn add(&mut self, truth: ActivityLabel, pred: ActivityLabel) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..ActivityLabel::COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, truth: ActivityLabel) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// `trace / total`; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// Mean per-class recall over classes with at least one true instance.
    pub fn balanced_accuracy(&self) -> f64 {
        let recalls: Vec<f64> = ActivityLabel::ALL
            .iter()
            .filter(|l| self.row_total(**l) > 0)
            .map(|l| self.counts[l.index()][l.index()] as f64 / self.row_total(*l) as f64)
            .collect();
        if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        }
    }

    /// Off-diagonal count between two classes in both directions.
    pub fn confusions_between(&self, a: ActivityLabel, b: ActivityLabel) -> u64 {
        self.counts[a.index()][b.index()] + self.counts[b.index()][a.index()]
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["true\\pred".to_string()];
        header.extend(ActivityLabel::ALL.iter().map(|l| l.name().to_string()));
        w.write_record(&header)?;
        for l in ActivityLabel::ALL {
            let mut row = vec![l.name().to_string()];
            row.extend(self.counts[l.index()].iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

pub fn accuracy(truth: &[ActivityLabel], pred: &[ActivityLabel]) -> f64 {
    ConfusionMatrix::from_pairs(truth, pred).accuracy()
}

pub fn balanced_accuracy(truth: &[ActivityLabel], pred: &[ActivityLabel]) -> f64 {
    ConfusionMatrix::from_pairs(truth, pred).balanced_accuracy()
}

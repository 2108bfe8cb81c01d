//! Permutation feature importance.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::balanced_accuracy;
use super::pipeline::{Prepared, TrainedPipeline};
use super::EvalError;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub name: String,
    /// Mean drop in balanced accuracy over the permutation repeats.
    pub importance: f64,
    /// 1-based, after sorting by importance (descending, stable).
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_balanced_accuracy: f64,
    pub repeats: usize,
    pub seed: u64,
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn get(&self, name: &str) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn top(&self, n: usize) -> &[ImportanceEntry] {
        &self.entries[..n.min(self.entries.len())]
    }

    /// Columns `name, importance, rank`; `limit` keeps only the top rows.
    pub fn write_csv(&self, path: &Path, limit: Option<usize>) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["name", "importance", "rank"])?;
        for e in self.top(limit.unwrap_or(usize::MAX)) {
            w.write_record([e.name.clone(), e.importance.to_string(), e.rank.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const MIN_REPEATS: usize = 5;

/// Shuffle each input dimension across the evaluation rows `repeats` times
/// and record the mean balanced-accuracy drop. Inputs are the raw timesteps
/// (`t0`, `t1`, ...) the model reads, followed by its HC feature names.
pub fn permutation_importance(
    model: &TrainedPipeline,
    data: &Prepared,
    eval_idx: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport, EvalError> {
    if eval_idx.is_empty() {
        return Err(EvalError::EmptySplit("evaluation set".into()));
    }
    if repeats < MIN_REPEATS {
        return Err(EvalError::Config(format!("at least {MIN_REPEATS} permutation repeats required")));
    }
    let truth = data.labels(eval_idx);
    let raw: Vec<Vec<f64>> = eval_idx.iter().map(|&i| data.raw[i].clone()).collect();
    let hc: Vec<Vec<f64>> = eval_idx.iter().map(|&i| data.hc[i].clone()).collect();
    let (raw, hc) = (
        if model.uses_raw { raw } else { Vec::new() },
        if model.uses_hc { hc } else { Vec::new() },
    );
    let base = balanced_accuracy(&truth, &model.predict_rows(&raw, &hc)?);
    let names = model.input_names(data);
    let n_raw = if model.uses_raw { raw.first().map_or(0, Vec::len) } else { 0 };

    let drops = (0..names.len())
        .into_par_iter()
        .map(|dim| {
            let mut total = 0.0;
            for r in 0..repeats {
                let mut rng = seed::rng(seed::derive_seed(seed, &[0x9E47, dim as u64, r as u64]));
                let mut perm: Vec<usize> = (0..eval_idx.len()).collect();
                perm.shuffle(&mut rng);
                let (mut raw_p, mut hc_p) = (raw.clone(), hc.clone());
                if dim < n_raw {
                    for (row, &src) in perm.iter().enumerate() {
                        raw_p[row][dim] = raw[src][dim];
                    }
                } else {
                    let j = dim - n_raw;
                    for (row, &src) in perm.iter().enumerate() {
                        hc_p[row][j] = hc[src][j];
                    }
                }
                total += base - balanced_accuracy(&truth, &model.predict_rows(&raw_p, &hc_p)?);
            }
            Ok(total / repeats as f64)
        })
        .collect::<Result<Vec<f64>, EvalError>>()?;

    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| drops[b].total_cmp(&drops[a]));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(r, i)| ImportanceEntry { name: names[i].clone(), importance: drops[i], rank: r + 1 })
        .collect();
    Ok(ImportanceReport { baseline_balanced_accuracy: base, repeats, seed, entries })
}

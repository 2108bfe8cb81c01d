//! Handcrafted feature families computed per window.
//!
//! Names are stable per [`FeatureSetKind`]; [`extract`] prefixes every name
//! with `0_` so importance reports read e.g. `0_Autocorrelation`.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{standardize_window, PreprocessError, SubjectStats, Window};

mod base;
mod mfcc;
mod statistical;
mod temporal;

pub use base::{base_features, BASE_NAMES};
pub use mfcc::{
    band_centers, dct2_ortho, hz_to_mel, mel_filterbank, mel_log_energies, mel_to_hz, mfcc_features, power_spectrum,
    MfccConfig, LOG_FLOOR,
};
pub use statistical::{statistical_features, STATISTICAL_NAMES};
pub use temporal::{temporal_features, TEMPORAL_NAMES};

pub const HC_PREFIX: &str = "0_";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("window of length {got} too short; need at least {needed}")]
    WindowTooShort { needed: usize, got: usize },
    #[error("feature `{0}` is not finite")]
    NonFinite(String),
    #[error("invalid MFCC config: {0}")]
    InvalidMfcc(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetKind {
    Base,
    BaseMfcc,
    Statistical,
    Temporal,
    /// Statistical followed by Temporal.
    StatTemporal,
}

impl FeatureSetKind {
    /// Unprefixed feature names, in output order.
    pub fn names(self, mfcc: &MfccConfig) -> Vec<String> {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            FeatureSetKind::Base => own(&BASE_NAMES),
            FeatureSetKind::BaseMfcc => {
                let mut v = own(&BASE_NAMES);
                v.extend(mfcc::coefficient_names(mfcc));
                v
            }
            FeatureSetKind::Statistical => own(&STATISTICAL_NAMES),
            FeatureSetKind::Temporal => own(&TEMPORAL_NAMES),
            FeatureSetKind::StatTemporal => {
                let mut v = own(&STATISTICAL_NAMES);
                v.extend(own(&TEMPORAL_NAMES));
                v
            }
        }
    }

    pub fn dim(self, mfcc: &MfccConfig) -> usize {
        self.names(mfcc).len()
    }
}

/// Named handcrafted features of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
    pub subject_id: String,
    pub start_index: usize,
}

/// Whether features see raw BPM or the subject's z-scored series.
#[derive(Debug, Clone, Copy)]
pub enum FeatureInput<'a> {
    Raw,
    Standardized(&'a SubjectStats),
}

pub(crate) fn require_len(values: &[f64], needed: usize) -> Result<(), FeatureError> {
    if values.len() < needed {
        Err(FeatureError::WindowTooShort { needed, got: values.len() })
    } else {
        Ok(())
    }
}

/// Compute the values of one feature set for raw window values.
pub fn compute(values: &[f64], kind: FeatureSetKind, mfcc: &MfccConfig) -> Result<Vec<f64>, FeatureError> {
    let v = match kind {
        FeatureSetKind::Base => base_features(values)?,
        FeatureSetKind::BaseMfcc => {
            let mut v = base_features(values)?;
            v.extend(mfcc_features(values, mfcc)?);
            v
        }
        FeatureSetKind::Statistical => statistical_features(values)?,
        FeatureSetKind::Temporal => temporal_features(values)?,
        FeatureSetKind::StatTemporal => {
            let mut v = statistical_features(values)?;
            v.extend(temporal_features(values)?);
            v
        }
    };
    Ok(v)
}

/// Feature vectors for every window, in input order.
pub fn extract(
    windows: &[Window],
    kind: FeatureSetKind,
    mfcc: &MfccConfig,
    input: FeatureInput<'_>,
) -> Result<Vec<FeatureVector>, FeatureError> {
    let names: Arc<[String]> = kind
        .names(mfcc)
        .into_iter()
        .map(|n| format!("{HC_PREFIX}{n}"))
        .collect();
    windows
        .par_iter()
        .map(|w| {
            let values = match input {
                FeatureInput::Raw => compute(&w.values, kind, mfcc)?,
                FeatureInput::Standardized(stats) => compute(&standardize_window(w, stats)?.values, kind, mfcc)?,
            };
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite(names[i].clone()));
            }
            Ok(FeatureVector {
                names: Arc::clone(&names),
                values,
                subject_id: w.subject_id.clone(),
                start_index: w.start_index,
            })
        })
        .collect()
}

/// CSV with one row per window: feature columns, then subject_id,
/// start_index, label.
pub fn write_feature_matrix(vectors: &[FeatureVector], windows: &[Window], path: &Path) -> Result<(), FeatureError> {
    let mut writer = csv::Writer::from_path(path)?;
    if let Some(first) = vectors.first() {
        let mut header: Vec<&str> = first.names.iter().map(String::as_str).collect();
        header.extend(["subject_id", "start_index", "label"]);
        writer.write_record(&header)?;
    }
    for (fv, w) in vectors.iter().zip(windows) {
        let mut row: Vec<String> = fv.values.iter().map(|v| v.to_string()).collect();
        row.push(fv.subject_id.clone());
        row.push(fv.start_index.to_string());
        row.push(w.label.name().to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Sort a copy of the values ascending.
pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Treat a spread as zero when it is negligible next to the magnitude of the data.
pub(crate) fn negligible_spread(spread: f64, location: f64) -> bool {
    spread <= 1e-12 * location.abs().max(1.0)
}

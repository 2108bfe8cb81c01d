//! Input preparation and classifier fitting shared by every experiment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::features::{self, FeatureInput, FeatureSetKind, MfccConfig};
use crate::ingest::{ActivityLabel, SubjectSeries};
use crate::neuralnet::{ArchitectureId, NetConfig, NetDataset, NetModel};
use crate::preprocess::{
    fit_scaler, segment_all, standardize_window, subject_stats, Scaler, StandardizationMode, SubjectStats, Window,
    WindowConfig,
};
use crate::seed;
use crate::svm::{OvoSvm, SvmParams};

/// What a classifier sees for each window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    /// `None` feeds the raw window to the SVM; nets always get the raw window.
    pub features: Option<FeatureSetKind>,
    /// Compute HC features from the subject's z-scored series.
    pub standardized_input: bool,
    pub standardization: StandardizationMode,
    pub mfcc: MfccConfig,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            features: None,
            standardized_input: false,
            standardization: StandardizationMode::None,
            mfcc: MfccConfig::default(),
        }
    }
}

impl InputSpec {
    pub fn raw(standardization: StandardizationMode) -> Self {
        Self { standardization, ..Self::default() }
    }

    pub fn features(kind: FeatureSetKind, standardization: StandardizationMode) -> Self {
        Self { features: Some(kind), standardization, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Svm(SvmParams),
    /// `config.window_size` and `config.hc_dim` are filled in from the data.
    Net { arch: ArchitectureId, config: NetConfig },
}

impl ModelSpec {
    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Svm(p) => format!("svm:{:?}:C={}", p.kernel.kind, p.c),
            ModelSpec::Net { arch, .. } => format!("net:{}", arch.name()),
        }
    }

    fn uses_raw(&self, input: &InputSpec) -> bool {
        matches!(self, ModelSpec::Net { .. }) || input.features.is_none()
    }

    fn uses_hc(&self, input: &InputSpec) -> bool {
        input.features.is_some() && !(matches!(self, ModelSpec::Net { arch: ArchitectureId::Baseline, .. }))
    }
}

/// Windows of a corpus with their model-ready raw values and HC features.
#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub windows: Vec<Window>,
    /// Raw window values, z-scored per subject under `DataStd`.
    pub raw: Vec<Vec<f64>>,
    /// HC features (empty rows when the input spec has none).
    pub hc: Vec<Vec<f64>>,
    pub hc_names: Vec<String>,
}

impl Prepared {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn labels(&self, idx: &[usize]) -> Vec<ActivityLabel> {
        idx.iter().map(|&i| self.windows[i].label).collect()
    }

    /// Sorted distinct subject ids.
    pub fn subjects(&self) -> Vec<String> {
        let mut s: Vec<String> = self.windows.iter().map(|w| w.subject_id.clone()).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn indices_of(&self, pred: impl Fn(&str) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| pred(&self.windows[i].subject_id)).collect()
    }
}

/// Segment a corpus and prepare every window.
pub fn prepare(corpus: &[SubjectSeries], cfg: WindowConfig, input: &InputSpec) -> Result<Prepared, EvalError> {
    let needs_stats = input.standardization == StandardizationMode::DataStd || input.standardized_input;
    let stats = if needs_stats { Some(subject_stats(corpus)?) } else { None };
    prepare_windows(segment_all(corpus, cfg), stats.as_ref(), input)
}

/// Prepare already-segmented windows. `stats` is required for `DataStd` or
/// standardized-input features.
pub fn prepare_windows(
    windows: Vec<Window>,
    stats: Option<&SubjectStats>,
    input: &InputSpec,
) -> Result<Prepared, EvalError> {
    let need = |why: &str| EvalError::Config(format!("subject statistics required for {why}"));
    let raw: Vec<Vec<f64>> = if input.standardization == StandardizationMode::DataStd {
        let stats = stats.ok_or_else(|| need("DataStd"))?;
        windows
            .iter()
            .map(|w| Ok(standardize_window(w, stats)?.values))
            .collect::<Result<_, EvalError>>()?
    } else {
        windows.iter().map(|w| w.values.clone()).collect()
    };
    let (hc, hc_names) = match input.features {
        Some(kind) => {
            let fi = if input.standardized_input {
                FeatureInput::Standardized(stats.ok_or_else(|| need("standardized-input features"))?)
            } else {
                FeatureInput::Raw
            };
            let vs = features::extract(&windows, kind, &input.mfcc, fi)?;
            let names = vs.first().map(|v| v.names.to_vec()).unwrap_or_default();
            (vs.into_iter().map(|v| v.values).collect(), names)
        }
        None => (vec![Vec::new(); windows.len()], Vec::new()),
    };
    Ok(Prepared { windows, raw, hc, hc_names })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Svm(OvoSvm),
    Net(Box<NetModel>),
}

/// A classifier with every statistic it needs, all fit on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub input: InputSpec,
    pub spec: ModelSpec,
    pub raw_scaler: Option<Scaler>,
    pub hc_scaler: Option<Scaler>,
    pub model: TrainedModel,
    pub uses_raw: bool,
    pub uses_hc: bool,
}

fn pick(rows: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

fn maybe_scale(scaler: &Option<Scaler>, rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, EvalError> {
    match scaler {
        Some(s) => Ok(s.apply_all(&rows)?),
        None => Ok(rows),
    }
}

/// Fit a classifier on `train` rows of `data`.
pub fn fit_pipeline(
    data: &Prepared,
    train: &[usize],
    input: &InputSpec,
    spec: &ModelSpec,
    seed: u64,
) -> Result<TrainedPipeline, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptySplit("training set".into()));
    }
    let uses_raw = spec.uses_raw(input);
    let uses_hc = spec.uses_hc(input);
    let feature_std = input.standardization == StandardizationMode::FeatureStd;
    let is_net = matches!(spec, ModelSpec::Net { .. });
    let raw_rows = if uses_raw { pick(&data.raw, train) } else { Vec::new() };
    let hc_rows = if uses_hc { pick(&data.hc, train) } else { Vec::new() };
    let raw_scaler = if uses_raw && feature_std { Some(fit_scaler(&raw_rows)?) } else { None };
    let hc_scaler = if uses_hc && (feature_std || is_net) { Some(fit_scaler(&hc_rows)?) } else { None };
    let raw_rows = maybe_scale(&raw_scaler, raw_rows)?;
    let hc_rows = maybe_scale(&hc_scaler, hc_rows)?;
    let labels = data.labels(train);

    let model = match spec {
        ModelSpec::Svm(params) => {
            let x = if uses_raw { raw_rows } else { hc_rows };
            TrainedModel::Svm(OvoSvm::train(&x, &labels, params)?)
        }
        ModelSpec::Net { arch, config } => {
            let hc_dim = if uses_hc { data.hc_names.len() } else { 0 };
            let cfg = NetConfig {
                window_size: data.windows[train[0]].len(),
                hc_dim,
                seed: seed::derive_seed(seed, &[0x4E37]),
                ..*config
            };
            let hc = if uses_hc { hc_rows } else { vec![Vec::new(); train.len()] };
            let dataset = NetDataset { windows: raw_rows, hc, labels: labels.iter().map(|l| l.index()).collect() };
            let mut m = NetModel::build(*arch, &cfg)?;
            m.fit(&dataset)?;
            TrainedModel::Net(Box::new(m))
        }
    };
    Ok(TrainedPipeline { input: *input, spec: *spec, raw_scaler, hc_scaler, model, uses_raw, uses_hc })
}

impl TrainedPipeline {
    /// Predict from unscaled prepared rows (raw and HC may be empty when unused).
    pub fn predict_rows(&self, raw: &[Vec<f64>], hc: &[Vec<f64>]) -> Result<Vec<ActivityLabel>, EvalError> {
        let n = raw.len().max(hc.len());
        let raw = if self.uses_raw { maybe_scale(&self.raw_scaler, raw.to_vec())? } else { vec![Vec::new(); n] };
        let hc = if self.uses_hc { maybe_scale(&self.hc_scaler, hc.to_vec())? } else { vec![Vec::new(); n] };
        match &self.model {
            TrainedModel::Svm(m) => {
                let x = if self.uses_raw { raw } else { hc };
                Ok(m.predict_all(&x)?)
            }
            TrainedModel::Net(m) => (0..n)
                .into_par_iter()
                .map(|i| {
                    let c = m.predict(&raw[i], &hc[i])?;
                    ActivityLabel::from_index(c).ok_or(EvalError::Invariant(format!("class index {c}")))
                })
                .collect(),
        }
    }

    pub fn predict(&self, data: &Prepared, idx: &[usize]) -> Result<Vec<ActivityLabel>, EvalError> {
        let raw = if self.uses_raw { pick(&data.raw, idx) } else { Vec::new() };
        let hc = if self.uses_hc { pick(&data.hc, idx) } else { Vec::new() };
        self.predict_rows(&raw, &hc)
    }

    /// Names of the inputs the model consumes: timestep indices, then HC names.
    pub fn input_names(&self, data: &Prepared) -> Vec<String> {
        let mut names = Vec::new();
        if self.uses_raw {
            let w = data.raw.first().map_or(0, Vec::len);
            names.extend((0..w).map(|t| format!("t{t}")));
        }
        if self.uses_hc {
            names.extend(data.hc_names.iter().cloned());
        }
        names
    }
}

//! Window/stride segmentation and the two standardization schemes.
//!
//! *Data* standardization z-scores each subject's whole series before
//! windowing. *Feature* standardization fits a [`Scaler`] on training vectors
//! and applies it unchanged to test vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ActivityLabel, SubjectSeries};

/// Guard below which a standard deviation counts as zero.
pub const STD_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid window config: window {window_size}, stride {stride}")]
    InvalidWindowConfig { window_size: usize, stride: usize },
    #[error("series `{0}` has (near) zero variance or fewer than two samples")]
    DegenerateSeries(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot fit a scaler on an empty training set")]
    EmptyTrainingSet,
    #[error("no statistics for subject `{0}`")]
    UnknownSubject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_size: usize,
    pub stride: usize,
}

impl WindowConfig {
    pub fn new(window_size: usize, stride: usize) -> Result<Self, PreprocessError> {
        if window_size < 2 || stride < 1 {
            return Err(PreprocessError::InvalidWindowConfig { window_size, stride });
        }
        Ok(Self { window_size, stride })
    }

    /// `floor((n - W) / S) + 1` when `n >= W`, else 0.
    pub fn count(&self, n: usize) -> usize {
        if n < self.window_size {
            0
        } else {
            (n - self.window_size) / self.stride + 1
        }
    }
}

/// A fixed-length slice of one subject's series with a single label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub subject_id: String,
    pub start_index: usize,
    pub values: Vec<f64>,
    pub label: ActivityLabel,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StandardizationMode {
    #[default]
    None,
    DataStd,
    FeatureStd,
}

/// Majority label; ties go to whichever tied label occurs last in the window
/// (which is the last sample's label whenever that label is tied).
pub fn majority_label(labels: &[ActivityLabel]) -> ActivityLabel {
    let mut counts = [0usize; ActivityLabel::COUNT];
    let mut last_seen = [0usize; ActivityLabel::COUNT];
    for (i, l) in labels.iter().enumerate() {
        counts[l.index()] += 1;
        last_seen[l.index()] = i;
    }
    let best = *counts.iter().max().unwrap_or(&0);
    ActivityLabel::ALL
        .into_iter()
        .filter(|l| counts[l.index()] == best && best > 0)
        .max_by_key(|l| last_seen[l.index()])
        .unwrap_or(ActivityLabel::Rest)
}

/// Cut a (uniformly resampled) series into windows starting at 0, S, 2S, ...
pub fn segment(series: &SubjectSeries, cfg: WindowConfig) -> Vec<Window> {
    let n = series.len();
    let w = cfg.window_size;
    (0..cfg.count(n))
        .map(|k| {
            let start = k * cfg.stride;
            let slice = &series.samples[start..start + w];
            let labels: Vec<ActivityLabel> = slice.iter().map(|s| s.label).collect();
            Window {
                subject_id: series.subject_id.clone(),
                start_index: start,
                values: slice.iter().map(|s| s.bpm).collect(),
                label: majority_label(&labels),
            }
        })
        .collect()
}

/// Segment every series; output ordered by subject id, then start index.
pub fn segment_all(corpus: &[SubjectSeries], cfg: WindowConfig) -> Vec<Window> {
    let mut sorted: Vec<&SubjectSeries> = corpus.iter().collect();
    sorted.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    sorted.into_iter().flat_map(|s| segment(s, cfg)).collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Per-subject location/scale of a whole series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
}

impl SeriesStats {
    pub fn of(series: &SubjectSeries) -> Result<Self, PreprocessError> {
        let (mean, std) = mean_std(&series.bpm());
        if series.len() < 2 || std.is_nan() || std < STD_EPSILON {
            return Err(PreprocessError::DegenerateSeries(series.subject_id.clone()));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Subject id → whole-series statistics.
pub type SubjectStats = BTreeMap<String, SeriesStats>;

pub fn subject_stats(corpus: &[SubjectSeries]) -> Result<SubjectStats, PreprocessError> {
    corpus
        .iter()
        .map(|s| Ok((s.subject_id.clone(), SeriesStats::of(s)?)))
        .collect()
}

/// Per-subject z-score (sample standard deviation) of a whole series.
pub fn standardize_series(series: &SubjectSeries) -> Result<SubjectSeries, PreprocessError> {
    let stats = SeriesStats::of(series)?;
    let mut out = series.clone();
    for s in &mut out.samples {
        s.bpm = stats.apply(s.bpm);
    }
    Ok(out)
}

/// Apply a subject's whole-series z-score to one window, which equals
/// windowing the standardized series.
pub fn standardize_window(window: &Window, stats: &SubjectStats) -> Result<Window, PreprocessError> {
    let st = stats
        .get(&window.subject_id)
        .ok_or_else(|| PreprocessError::UnknownSubject(window.subject_id.clone()))?;
    let mut out = window.clone();
    out.values.iter_mut().for_each(|v| *v = st.apply(*v));
    Ok(out)
}

/// Per-dimension z-score learned from training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub epsilon: f64,
}

/// Fit a scaler on training vectors only. Dimensions whose sample standard
/// deviation is below the epsilon guard get std 1.
pub fn fit_scaler(train_vectors: &[Vec<f64>]) -> Result<Scaler, PreprocessError> {
    let first = train_vectors.first().ok_or(PreprocessError::EmptyTrainingSet)?;
    let dim = first.len();
    if let Some(bad) = train_vectors.iter().find(|v| v.len() != dim) {
        return Err(PreprocessError::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let n = train_vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in train_vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut ss = vec![0.0; dim];
    for v in train_vectors {
        for ((s, x), m) in ss.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = ss
        .into_iter()
        .map(|s| {
            let sd = if n > 1.0 { (s / (n - 1.0)).sqrt() } else { 0.0 };
            if sd < STD_EPSILON { 1.0 } else { sd }
        })
        .collect();
    Ok(Scaler { mean, std, epsilon: STD_EPSILON })
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, vector: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        if vector.len() != self.dim() {
            return Err(PreprocessError::DimensionMismatch { expected: self.dim(), got: vector.len() });
        }
        Ok(vector
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn apply_all(&self, vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PreprocessError> {
        vectors.iter().map(|v| self.apply(v)).collect()
    }
}

/// Free-function form of [`Scaler::apply`].
pub fn apply_scaler(scaler: &Scaler, vector: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    scaler.apply(vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{HeartRateSample, DEFAULT_DEVICE};
    use proptest::prelude::*;
    use ActivityLabel::*;

    fn series(bpm: &[f64], labels: &[ActivityLabel]) -> SubjectSeries {
        SubjectSeries {
            subject_id: "s".into(),
            device_id: DEFAULT_DEVICE.into(),
            samples: bpm
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(i, (&bpm, &label))| HeartRateSample { timestamp: i as f64, bpm, label })
                .collect(),
        }
    }

    fn ramp(n: usize) -> SubjectSeries {
        let bpm: Vec<f64> = (0..n).map(|i| 60.0 + (i % 17) as f64).collect();
        series(&bpm, &vec![Rest; n])
    }

    #[test]
    fn window_counts() {
        let cfg = WindowConfig::new(50, 10).unwrap();
        assert_eq!(segment(&ramp(780), cfg).len(), 74);
        assert_eq!(segment(&ramp(49), cfg).len(), 0);
        let cfg = WindowConfig::new(120, 120).unwrap();
        assert_eq!(segment(&ramp(780), cfg).len(), 6);
    }

    #[test]
    fn invalid_window_config() {
        assert!(WindowConfig::new(1, 1).is_err());
        assert!(WindowConfig::new(5, 0).is_err());
    }

    #[test]
    fn majority_and_tie_rules() {
        let mut labels = vec![Rest; 30];
        labels.extend(vec![Activity; 20]);
        assert_eq!(majority_label(&labels), Rest);
        assert_eq!(majority_label(&[Rest, Rest, Activity, Activity]), Activity);
        assert_eq!(majority_label(&[Activity, Rest, Rest, Activity]), Activity);
        assert_eq!(majority_label(&[Type, Type, Rest, Rest, Breathe]), Rest);
    }

    #[test]
    fn standardize_small_series() {
        let s = standardize_series(&series(&[60.0, 70.0, 80.0], &[Rest; 3])).unwrap();
        assert_eq!(s.bpm(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_constant_errors() {
        assert!(matches!(
            standardize_series(&series(&[70.0; 5], &[Rest; 5])),
            Err(PreprocessError::DegenerateSeries(_))
        ));
    }

    #[test]
    fn scaler_fit_and_apply() {
        let sc = fit_scaler(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(sc.mean, vec![1.0]);
        assert!((sc.std[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sc.apply(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn scaler_constant_dimension_uses_unit_std() {
        let sc = fit_scaler(&[vec![3.0, 1.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(sc.std[0], 1.0);
        assert_eq!(sc.apply(&[5.0, 1.5]).unwrap()[0], 2.0);
    }

    #[test]
    fn scaler_errors() {
        assert!(matches!(fit_scaler(&[]), Err(PreprocessError::EmptyTrainingSet)));
        let sc = fit_scaler(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            sc.apply(&[1.0]),
            Err(PreprocessError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    proptest! {
        #[test]
        fn window_count_formula(n in 0usize..100_000, w in 2usize..500, s in 1usize..500) {
            let cfg = WindowConfig::new(w, s).unwrap();
            let expected = if n >= w { (n - w) / s + 1 } else { 0 };
            prop_assert_eq!(cfg.count(n), expected);
        }

        #[test]
        fn windows_cover_all_but_tail(n in 2usize..400, w in 2usize..60, s in 1usize..60) {
            prop_assume!(s <= w && n >= w);
            let s_ = ramp(n);
            let cfg = WindowConfig::new(w, s).unwrap();
            let windows = segment(&s_, cfg);
            let last_end = windows.last().unwrap().start_index + w;
            let mut covered = vec![false; n];
            for win in &windows {
                covered[win.start_index..win.start_index + w].iter_mut().for_each(|c| *c = true);
            }
            prop_assert!(covered[..last_end].iter().all(|&c| c));
            prop_assert!(n - last_end < w);
        }

        #[test]
        fn data_std_commutes_with_segmentation(
            bpm in proptest::collection::vec(40.0f64..180.0, 10..200),
            w in 2usize..10,
            s in 1usize..10,
        ) {
            let labels = vec![Rest; bpm.len()];
            let raw = series(&bpm, &labels);
            prop_assume!(SeriesStats::of(&raw).is_ok());
            let cfg = WindowConfig::new(w, s).unwrap();
            let stats = subject_stats(std::slice::from_ref(&raw)).unwrap();
            let a = segment(&standardize_series(&raw).unwrap(), cfg);
            let b: Vec<Window> = segment(&raw, cfg).iter().map(|x| standardize_window(x, &stats).unwrap()).collect();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                for (p, q) in x.values.iter().zip(&y.values) {
                    prop_assert!((p - q).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn standardized_series_has_zero_mean_unit_std(bpm in proptest::collection::vec(40.0f64..180.0, 2..500)) {
            let raw = series(&bpm, &vec![Rest; bpm.len()]);
            prop_assume!(SeriesStats::of(&raw).is_ok());
            let (m, sd) = mean_std(&standardize_series(&raw).unwrap().bpm());
            prop_assert!(m.abs() < 1e-12);
            prop_assert!((sd - 1.0).abs() < 1e-12);
        }

        #[test]
        fn scaler_standardizes_its_training_set(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..50)
        ) {
            let sc = fit_scaler(&rows).unwrap();
            let out = sc.apply_all(&rows).unwrap();
            for d in 0..3 {
                let col: Vec<f64> = out.iter().map(|r| r[d]).collect();
                let (m, sd) = mean_std(&col);
                prop_assert!(m.abs() < 1e-9);
                if sc.std[d] != 1.0 || mean_std(&rows.iter().map(|r| r[d]).collect::<Vec<_>>()).1 >= STD_EPSILON {
                    prop_assert!((sd - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

//! Per-timestep prediction timelines around activity changes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::{prepare_windows, TrainedPipeline};
use super::EvalError;
use crate::ingest::{ActivityLabel, SubjectSeries};
use crate::preprocess::{segment, SeriesStats, SubjectStats, WindowConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub t: f64,
    pub bpm: f64,
    pub truth: ActivityLabel,
    pub pred: ActivityLabel,
    pub correct: bool,
    /// True where the label differs from the previous sample's.
    pub transition: bool,
}

/// Index of the window whose center `start + (W−1)/2` is nearest to `t`
/// (ties to the earlier window). Works on doubled coordinates to stay exact.
pub fn covering_window(t: usize, starts: &[usize], window: usize) -> usize {
    let twice_t = 2 * t as i64;
    let mut best = 0;
    let mut best_d = i64::MAX;
    for (i, &s) in starts.iter().enumerate() {
        let d = (2 * s as i64 + window as i64 - 1 - twice_t).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Predict every window of `series` and spread the predictions over the
/// timesteps.
pub fn misclassification_timeline(
    model: &TrainedPipeline,
    series: &SubjectSeries,
    cfg: WindowConfig,
) -> Result<Vec<TimelineRow>, EvalError> {
    if series.len() < cfg.window_size {
        return Err(EvalError::SeriesTooShort { needed: cfg.window_size, got: series.len() });
    }
    let stats: SubjectStats = [(series.subject_id.clone(), SeriesStats::of(series)?)].into();
    let windows = segment(series, cfg);
    let starts: Vec<usize> = windows.iter().map(|w| w.start_index).collect();
    let data = prepare_windows(windows, Some(&stats), &model.input)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let preds = model.predict(&data, &idx)?;
    Ok(series
        .samples
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let pred = preds[covering_window(t, &starts, cfg.window_size)];
            TimelineRow {
                t: s.timestamp,
                bpm: s.bpm,
                truth: s.label,
                pred,
                correct: pred == s.label,
                transition: t > 0 && series.samples[t - 1].label != s.label,
            }
        })
        .collect())
}

/// Error rates (within `after` seconds following a transition, elsewhere).
pub fn transition_error_rates(rows: &[TimelineRow], after: f64) -> (f64, f64) {
    let mut last_change = f64::NEG_INFINITY;
    let (mut near, mut near_err, mut steady, mut steady_err) = (0usize, 0usize, 0usize, 0usize);
    for r in rows {
        if r.transition {
            last_change = r.t;
        }
        if r.t - last_change < after {
            near += 1;
            near_err += usize::from(!r.correct);
        } else {
            steady += 1;
            steady_err += usize::from(!r.correct);
        }
    }
    let rate = |e: usize, n: usize| if n == 0 { 0.0 } else { e as f64 / n as f64 };
    (rate(near_err, near), rate(steady_err, steady))
}

/// CSV columns `t, bpm, true, pred, correct, transition`.
pub fn write_timeline_csv(rows: &[TimelineRow], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "bpm", "true", "pred", "correct", "transition"])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.bpm.to_string(),
            r.truth.name().to_string(),
            r.pred.name().to_string(),
            u8::from(r.correct).to_string(),
            u8::from(r.transition).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! Subject grouping.
//!
//! Subjects are clustered either on their five-point mean-BPM-per-activity
//! profile or, for routing unseen windows, in a window-feature space where a
//! subject is summarized by the mean of its (scaled) window feature vectors.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{statistical_features, temporal_features, FeatureError};
use crate::ingest::ActivityLabel;
use crate::preprocess::{fit_scaler, PreprocessError, Scaler, Window};
use crate::seed;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k-means needs k <= number of vectors (k = {k}, n = {n})")]
    TooFewVectors { k: usize, n: usize },
    #[error("k must be positive")]
    InvalidK,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subject {subject} has no {activity} windows")]
    MissingActivity { subject: String, activity: ActivityLabel },
    #[error("no windows to route")]
    NoWindows,
    #[error("space {0:?} cannot route unlabeled windows")]
    UnsupportedSpace(ClusterSpace),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterSpace {
    MeanBpmProfile,
    StatisticalWindow,
    TemporalWindow,
}

/// Mean BPM per activity, ordered Rest, Breathe, Activity, RestAC, Type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: String,
    pub profile: [f64; 5],
}

/// Per subject, the mean over its windows of each label of the window-mean BPM.
pub fn build_profiles(windows: &[Window]) -> Result<Vec<SubjectProfile>, ClusterError> {
    let mut acc: BTreeMap<&str, ([f64; 5], [usize; 5])> = BTreeMap::new();
    for w in windows {
        let e = acc.entry(w.subject_id.as_str()).or_insert(([0.0; 5], [0; 5]));
        e.0[w.label.index()] += w.mean();
        e.1[w.label.index()] += 1;
    }
    acc.into_iter()
        .map(|(subject, (sums, counts))| {
            let mut profile = [0.0; 5];
            for a in ActivityLabel::ALL {
                if counts[a.index()] == 0 {
                    return Err(ClusterError::MissingActivity { subject: subject.to_string(), activity: a });
                }
                profile[a.index()] = sums[a.index()] / counts[a.index()] as f64;
            }
            Ok(SubjectProfile { subject_id: subject.to_string(), profile })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, restarts: 10, max_iter: 300, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Index of the winning restart.
    pub restart: usize,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
pub fn nearest(centroids: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign_all(centroids: &[Vec<f64>], vectors: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    vectors.iter().map(|v| nearest(centroids, v)).unzip()
}

fn kmeans_plus_plus<R: Rng>(vectors: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut centroids = vec![vectors[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = vectors.iter().map(|v| squared_distance(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = vectors[pick].clone();
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(squared_distance(v, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(vectors: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, cfg: &KMeansConfig) -> KMeansFit {
    let dim = vectors[0].len();
    let k = centroids.len();
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iter {
        let (labels, dists) = assign_all(&centroids, vectors);
        trace.push(dists.iter().sum());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &l) in vectors.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        let mut spare = dists.clone();
        let mut next = Vec::with_capacity(k);
        for (sum, count) in sums.into_iter().zip(counts) {
            if count > 0 {
                next.push(sum.into_iter().map(|s| s / count as f64).collect::<Vec<_>>());
            } else {
                // reseed from the point farthest from its centroid
                let far = spare
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc })
                    .0;
                spare[far] = f64::NEG_INFINITY;
                next.push(vectors[far].clone());
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < cfg.tol {
            break;
        }
    }
    let (labels, dists) = assign_all(&centroids, vectors);
    let inertia: f64 = dists.iter().sum();
    trace.push(inertia);
    KMeansFit { centroids, labels, inertia, restart: 0, inertia_trace: trace }
}

/// k-means with k-means++ seeding and `restarts` independent restarts; the
/// restart with the lowest (inertia, restart index) wins.
pub fn kmeans_fit(vectors: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansFit, ClusterError> {
    if cfg.k == 0 {
        return Err(ClusterError::InvalidK);
    }
    if cfg.k > vectors.len() {
        return Err(ClusterError::TooFewVectors { k: cfg.k, n: vectors.len() });
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(ClusterError::DimensionMismatch { expected: dim, got: v.len() });
    }
    let fits: Vec<KMeansFit> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed::derive_seed(cfg.seed, &[0x4B4D, r as u64]));
            let init = kmeans_plus_plus(vectors, cfg.k, &mut rng);
            KMeansFit { restart: r, ..lloyd(vectors, init, cfg) }
        })
        .collect();
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.inertia < best.inertia { f } else { best })
        .expect("at least one restart"))
}

/// Fitted clustering in a declared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub space: ClusterSpace,
    /// Applied to incoming vectors before the distance computation.
    pub scaler: Option<Scaler>,
    pub seed: u64,
    pub inertia: f64,
}

/// Subject id → cluster index.
pub type ClusterAssignment = BTreeMap<String, usize>;

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Index of the nearest centroid (ties to the lowest index).
    pub fn assign_window(&self, vector: &[f64]) -> Result<usize, ClusterError> {
        let scaled;
        let v = match &self.scaler {
            Some(s) => {
                scaled = s.apply(vector)?;
                scaled.as_slice()
            }
            None => vector,
        };
        if v.len() != self.dim() {
            return Err(ClusterError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(nearest(&self.centroids, v).0)
    }

    /// Majority cluster over a subject's window vectors (ties to lowest index).
    pub fn route_subject(&self, vectors: &[Vec<f64>]) -> Result<usize, ClusterError> {
        if vectors.is_empty() {
            return Err(ClusterError::NoWindows);
        }
        let mut votes = vec![0usize; self.k];
        for v in vectors {
            votes[self.assign_window(v)?] += 1;
        }
        Ok(majority_index(&votes))
    }

    /// Window vector in this model's space (unscaled).
    pub fn window_vector(&self, window: &Window) -> Result<Vec<f64>, ClusterError> {
        window_space_vector(self.space, window)
    }
}

/// Lowest index among the largest counts.
pub fn majority_index(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Feature vector of a raw window in a routing space.
pub fn window_space_vector(space: ClusterSpace, window: &Window) -> Result<Vec<f64>, ClusterError> {
    match space {
        ClusterSpace::StatisticalWindow => Ok(statistical_features(&window.values)?),
        ClusterSpace::TemporalWindow => Ok(temporal_features(&window.values)?),
        ClusterSpace::MeanBpmProfile => Err(ClusterError::UnsupportedSpace(space)),
    }
}

fn assignment_from(ids: &[String], labels: &[usize]) -> ClusterAssignment {
    ids.iter().cloned().zip(labels.iter().copied()).collect()
}

/// Cluster subjects on their mean-BPM-per-activity profiles.
pub fn fit_profile_clusters(
    windows: &[Window],
    cfg: &KMeansConfig,
) -> Result<(ClusterModel, ClusterAssignment), ClusterError> {
    let profiles = build_profiles(windows)?;
    let ids: Vec<String> = profiles.iter().map(|p| p.subject_id.clone()).collect();
    let vectors: Vec<Vec<f64>> = profiles.iter().map(|p| p.profile.to_vec()).collect();
    let fit = kmeans_fit(&vectors, cfg)?;
    let model = ClusterModel {
        k: cfg.k,
        centroids: fit.centroids,
        space: ClusterSpace::MeanBpmProfile,
        scaler: None,
        seed: cfg.seed,
        inertia: fit.inertia,
    };
    Ok((model, assignment_from(&ids, &fit.labels)))
}

/// Cluster subjects in a window-feature space. A scaler is fit on all
/// training window vectors; each subject is summarized by the mean of its
/// scaled window vectors.
pub fn fit_window_space(
    windows: &[Window],
    space: ClusterSpace,
    cfg: &KMeansConfig,
) -> Result<(ClusterModel, ClusterAssignment), ClusterError> {
    if space == ClusterSpace::MeanBpmProfile {
        return Err(ClusterError::UnsupportedSpace(space));
    }
    if windows.is_empty() {
        return Err(ClusterError::NoWindows);
    }
    let raw: Vec<Vec<f64>> = windows
        .par_iter()
        .map(|w| window_space_vector(space, w))
        .collect::<Result<_, _>>()?;
    let scaler = fit_scaler(&raw)?;
    let scaled = scaler.apply_all(&raw)?;

    let mut per_subject: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for (w, v) in windows.iter().zip(&scaled) {
        let e = per_subject
            .entry(w.subject_id.as_str())
            .or_insert_with(|| (vec![0.0; v.len()], 0));
        e.0.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        e.1 += 1;
    }
    let ids: Vec<String> = per_subject.keys().map(|s| s.to_string()).collect();
    let summaries: Vec<Vec<f64>> = per_subject
        .into_values()
        .map(|(sum, n)| sum.into_iter().map(|s| s / n as f64).collect())
        .collect();
    let fit = kmeans_fit(&summaries, cfg)?;
    let model = ClusterModel {
        k: cfg.k,
        centroids: fit.centroids,
        space,
        scaler: Some(scaler),
        seed: cfg.seed,
        inertia: fit.inertia,
    };
    Ok((model, assignment_from(&ids, &fit.labels)))
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let expected = sum_a * sum_b / choose2(n);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMembers {
    pub cluster: usize,
    pub members: Vec<String>,
}

/// JSON cluster report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub space: ClusterSpace,
    pub clusters: Vec<ClusterMembers>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub seed: u64,
}

impl ClusterReport {
    pub fn new(model: &ClusterModel, assignment: &ClusterAssignment) -> Self {
        let clusters = (0..model.k)
            .map(|c| ClusterMembers {
                cluster: c,
                members: assignment.iter().filter(|(_, &v)| v == c).map(|(id, _)| id.clone()).collect(),
            })
            .collect();
        Self {
            k: model.k,
            space: model.space,
            clusters,
            centroids: model.centroids.clone(),
            inertia: model.inertia,
            seed: model.seed,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ClusterError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

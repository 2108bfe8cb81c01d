//! The experiment families: window/stride sweeps, cross-cluster transfer,
//! within-cluster leave-subject-out, and cluster-routed classification.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use super::pipeline::{fit_pipeline, prepare, InputSpec, ModelSpec, Prepared, TrainedPipeline};
use super::report::{mean, ConfigEcho, EvalReport, FoldRecord};
use super::split::{make_folds, subject_groups, Fold, SplitKind, SplitPlan};
use super::EvalError;
use crate::clustering::{fit_window_space, window_space_vector, ClusterAssignment, ClusterModel, ClusterSpace, KMeansConfig};
use crate::ingest::SubjectSeries;
use crate::preprocess::WindowConfig;
use crate::seed;

fn echo(data: &Prepared, input: &InputSpec, spec: &ModelSpec, plan: &SplitPlan, stride: usize) -> ConfigEcho {
    ConfigEcho {
        window: data.windows.first().map_or(0, |w| w.len()),
        stride,
        features: input.features.map(|f| format!("{f:?}")),
        standardization: format!("{:?}", input.standardization),
        model: spec.describe(),
        split: plan.describe(),
        clusters: None,
    }
}

fn check_disjoint(data: &Prepared, fold: &Fold) -> Result<(), EvalError> {
    let train: BTreeSet<&str> = fold.train.iter().map(|&i| data.windows[i].subject_id.as_str()).collect();
    match fold.test.iter().find(|&&i| train.contains(data.windows[i].subject_id.as_str())) {
        Some(&i) => Err(EvalError::Invariant(format!(
            "subject {} in both train and test of fold {}",
            data.windows[i].subject_id, fold.id
        ))),
        None => Ok(()),
    }
}

fn fold_seed(seed: u64, fold: &Fold) -> u64 {
    seed::derive_seed(seed, &[0xF01D, seed::hash_str(&fold.held_out)])
}

/// Train and test every fold (concurrently) and pool the confusion matrices.
pub fn evaluate_folds(
    data: &Prepared,
    folds: &[Fold],
    input: &InputSpec,
    spec: &ModelSpec,
    seed: u64,
    subject_disjoint: bool,
    config: ConfigEcho,
) -> Result<EvalReport, EvalError> {
    let results = folds
        .par_iter()
        .map(|fold| {
            if subject_disjoint {
                check_disjoint(data, fold)?;
            }
            if fold.test.is_empty() {
                return Err(EvalError::EmptySplit(format!("test set of fold {}", fold.id)));
            }
            let model = fit_pipeline(data, &fold.train, input, spec, fold_seed(seed, fold))?;
            let pred = model.predict(data, &fold.test)?;
            let cm = ConfusionMatrix::from_pairs(&data.labels(&fold.test), &pred);
            let rec = FoldRecord {
                fold: fold.id,
                held_out: fold.held_out.clone(),
                n_train: fold.train.len(),
                n_test: fold.test.len(),
                accuracy: cm.accuracy(),
                balanced_accuracy: cm.balanced_accuracy(),
            };
            Ok((rec, cm))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(EvalReport::from_folds(results, config))
}

/// Evaluate prepared windows under a split plan.
pub fn evaluate(
    data: &Prepared,
    plan: &SplitPlan,
    assignment: Option<&ClusterAssignment>,
    input: &InputSpec,
    spec: &ModelSpec,
    stride: usize,
) -> Result<EvalReport, EvalError> {
    let folds = make_folds(data, plan, assignment)?;
    let config = echo(data, input, spec, plan, stride);
    evaluate_folds(data, &folds, input, spec, plan.seed, plan.subject_disjoint(), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub window: usize,
    pub stride: usize,
    pub report: EvalReport,
}

/// One report per (window, stride) cell, in row-major order. Subject folds
/// are the same in every cell because they only depend on subject ids and
/// the plan seed.
pub fn run_sweep(
    corpus: &[SubjectSeries],
    window_sizes: &[usize],
    strides: &[usize],
    plan: &SplitPlan,
    input: &InputSpec,
    spec: &ModelSpec,
) -> Result<Vec<SweepCell>, EvalError> {
    let cells: Vec<WindowConfig> = window_sizes
        .iter()
        .flat_map(|&w| strides.iter().map(move |&s| WindowConfig::new(w, s)))
        .collect::<Result<_, _>>()?;
    cells
        .par_iter()
        .map(|cfg| {
            let data = prepare(corpus, *cfg, input)?;
            let report = evaluate(&data, plan, None, input, spec, cfg.stride)?;
            Ok(SweepCell { window: cfg.window_size, stride: cfg.stride, report })
        })
        .collect()
}

pub fn write_sweep_summary(cells: &[SweepCell], path: &Path) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["window", "stride", "accuracy", "balanced_accuracy", "n_folds", "n_test"])?;
    for c in cells {
        let n_test: usize = c.report.folds.iter().map(|f| f.n_test).sum();
        w.write_record([
            c.window.to_string(),
            c.stride.to_string(),
            c.report.accuracy.to_string(),
            c.report.balanced_accuracy.to_string(),
            c.report.folds.len().to_string(),
            n_test.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Train on every window of one cluster's subjects, test on another's.
pub fn cross_cluster_eval(
    data: &Prepared,
    assignment: &ClusterAssignment,
    train_cluster: usize,
    test_cluster: usize,
    input: &InputSpec,
    spec: &ModelSpec,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let plan = SplitPlan {
        kind: SplitKind::CrossCluster { train_cluster, test_cluster },
        ..SplitPlan::leave_subject_out(seed)
    };
    let folds = make_folds(data, &plan, Some(assignment))?;
    let mut config = echo(data, input, spec, &plan, 0);
    config.clusters = Some(format!("train={train_cluster},test={test_cluster}"));
    evaluate_folds(data, &folds, input, spec, seed, train_cluster != test_cluster, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub subject: String,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLoso {
    pub cluster: usize,
    pub members: Vec<String>,
    pub scores: Vec<SubjectScore>,
    pub mean_accuracy: f64,
    pub mean_balanced_accuracy: f64,
    /// Set when the cluster was too small to evaluate.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinClusterReport {
    pub clusters: Vec<ClusterLoso>,
    /// Leave-subject-out over all subjects without clustering.
    pub baseline: Vec<SubjectScore>,
    pub baseline_mean_accuracy: f64,
    pub baseline_mean_balanced_accuracy: f64,
}

impl WithinClusterReport {
    /// Baseline mean balanced accuracy restricted to the given subjects.
    pub fn baseline_mean_for(&self, members: &[String]) -> f64 {
        mean(self.baseline.iter().filter(|s| members.contains(&s.subject)).map(|s| s.balanced_accuracy))
    }
}

fn per_subject_scores(
    data: &Prepared,
    folds: &[Fold],
    input: &InputSpec,
    spec: &ModelSpec,
    seed: u64,
) -> Result<Vec<SubjectScore>, EvalError> {
    let per_fold = folds
        .par_iter()
        .map(|fold| {
            check_disjoint(data, fold)?;
            let model = fit_pipeline(data, &fold.train, input, spec, fold_seed(seed, fold))?;
            let pred = model.predict(data, &fold.test)?;
            let mut by_subject: BTreeMap<&str, ConfusionMatrix> = BTreeMap::new();
            for (&i, p) in fold.test.iter().zip(&pred) {
                by_subject.entry(data.windows[i].subject_id.as_str()).or_default().add(data.windows[i].label, *p);
            }
            Ok(by_subject
                .into_iter()
                .map(|(s, cm)| SubjectScore {
                    subject: s.to_string(),
                    accuracy: cm.accuracy(),
                    balanced_accuracy: cm.balanced_accuracy(),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut scores: Vec<SubjectScore> = per_fold.into_iter().flatten().collect();
    scores.sort_by(|a, b| a.subject.cmp(&b.subject));
    Ok(scores)
}

/// Leave one subject out inside each cluster, plus the unclustered baseline
/// whose folds follow `baseline_plan` (one subject per fold unless grouped).
pub fn within_cluster_loso(
    data: &Prepared,
    assignment: &ClusterAssignment,
    input: &InputSpec,
    spec: &ModelSpec,
    baseline_plan: &SplitPlan,
) -> Result<WithinClusterReport, EvalError> {
    let subjects = data.subjects();
    let k = assignment.values().max().map_or(0, |m| m + 1);
    let mut clusters = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<String> = subjects.iter().filter(|s| assignment.get(*s) == Some(&c)).cloned().collect();
        if members.len() < 2 {
            clusters.push(ClusterLoso {
                cluster: c,
                members,
                scores: Vec::new(),
                mean_accuracy: f64::NAN,
                mean_balanced_accuracy: f64::NAN,
                skipped: Some("cluster has fewer than two subjects".into()),
            });
            continue;
        }
        let pool: BTreeSet<&str> = members.iter().map(String::as_str).collect();
        let folds: Vec<Fold> = members
            .iter()
            .enumerate()
            .map(|(id, s)| {
                let train = data.indices_of(|x| x != s && pool.contains(x));
                let test = data.indices_of(|x| x == s);
                Fold { id, held_out: s.clone(), train, test }
            })
            .collect();
        let scores = per_subject_scores(data, &folds, input, spec, seed::derive_seed(baseline_plan.seed, &[c as u64]))?;
        clusters.push(ClusterLoso {
            cluster: c,
            members,
            mean_accuracy: mean(scores.iter().map(|s| s.accuracy)),
            mean_balanced_accuracy: mean(scores.iter().map(|s| s.balanced_accuracy)),
            scores,
            skipped: None,
        });
    }
    let folds: Vec<Fold> = subject_groups(&subjects, baseline_plan)
        .into_iter()
        .enumerate()
        .map(|(id, g)| {
            let held: BTreeSet<&str> = g.iter().map(String::as_str).collect();
            Fold {
                id,
                held_out: g.join("+"),
                train: data.indices_of(|x| !held.contains(x)),
                test: data.indices_of(|x| held.contains(x)),
            }
        })
        .collect();
    let baseline = per_subject_scores(data, &folds, input, spec, baseline_plan.seed)?;
    Ok(WithinClusterReport {
        clusters,
        baseline_mean_accuracy: mean(baseline.iter().map(|s| s.accuracy)),
        baseline_mean_balanced_accuracy: mean(baseline.iter().map(|s| s.balanced_accuracy)),
        baseline,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Routing {
    PerWindow,
    PerSubject,
}

/// Cluster index used for each window: its own nearest centroid, or the
/// majority cluster of its subject's windows.
pub fn route_windows(
    model: &ClusterModel,
    subjects: &[&str],
    vectors: &[Vec<f64>],
    routing: Routing,
) -> Result<Vec<usize>, EvalError> {
    let own: Vec<usize> = vectors.iter().map(|v| model.assign_window(v)).collect::<Result<_, _>>()?;
    match routing {
        Routing::PerWindow => Ok(own),
        Routing::PerSubject => {
            let mut grouped: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
            for (s, v) in subjects.iter().zip(vectors) {
                grouped.entry(s).or_default().push(v.clone());
            }
            let routed: BTreeMap<&str, usize> = grouped
                .into_iter()
                .map(|(s, vs)| Ok((s, model.route_subject(&vs)?)))
                .collect::<Result<_, EvalError>>()?;
            Ok(subjects.iter().map(|s| routed[s]).collect())
        }
    }
}

/// Cluster the training subjects in a window-feature space, train one
/// classifier per cluster, and route each test window to one of them.
#[allow(clippy::too_many_arguments)]
pub fn routed_eval(
    data: &Prepared,
    k: usize,
    routing: Routing,
    space: ClusterSpace,
    input: &InputSpec,
    spec: &ModelSpec,
    plan: &SplitPlan,
    stride: usize,
) -> Result<EvalReport, EvalError> {
    if plan.kind != SplitKind::LeaveSubjectOut {
        return Err(EvalError::Config("routed evaluation needs a leave-subject-out plan".into()));
    }
    let folds = make_folds(data, plan, None)?;
    let results = folds
        .par_iter()
        .map(|fold| {
            check_disjoint(data, fold)?;
            let fseed = fold_seed(plan.seed, fold);
            let train_windows: Vec<_> = fold.train.iter().map(|&i| data.windows[i].clone()).collect();
            let (model, assignment) = fit_window_space(&train_windows, space, &KMeansConfig::new(k, fseed))?;
            let classifiers: Vec<TrainedPipeline> = (0..k)
                .into_par_iter()
                .map(|c| {
                    let idx: Vec<usize> = fold
                        .train
                        .iter()
                        .copied()
                        .filter(|&i| assignment.get(&data.windows[i].subject_id) == Some(&c))
                        .collect();
                    if idx.is_empty() {
                        return Err(EvalError::EmptyCluster(c));
                    }
                    fit_pipeline(data, &idx, input, spec, seed::derive_seed(fseed, &[c as u64]))
                })
                .collect::<Result<_, _>>()?;
            let vectors: Vec<Vec<f64>> = fold
                .test
                .iter()
                .map(|&i| window_space_vector(space, &data.windows[i]))
                .collect::<Result<_, _>>()?;
            let subjects: Vec<&str> = fold.test.iter().map(|&i| data.windows[i].subject_id.as_str()).collect();
            let routes = route_windows(&model, &subjects, &vectors, routing)?;
            let mut cm = ConfusionMatrix::default();
            for (c, clf) in classifiers.iter().enumerate() {
                let idx: Vec<usize> = fold.test.iter().zip(&routes).filter(|(_, r)| **r == c).map(|(i, _)| *i).collect();
                if idx.is_empty() {
                    continue;
                }
                for (&i, p) in idx.iter().zip(clf.predict(data, &idx)?) {
                    cm.add(data.windows[i].label, p);
                }
            }
            let rec = FoldRecord {
                fold: fold.id,
                held_out: fold.held_out.clone(),
                n_train: fold.train.len(),
                n_test: fold.test.len(),
                accuracy: cm.accuracy(),
                balanced_accuracy: cm.balanced_accuracy(),
            };
            Ok((rec, cm))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut config = echo(data, input, spec, plan, stride);
    config.clusters = Some(format!("k={k},routing={routing:?},space={space:?}"));
    Ok(EvalReport::from_folds(results, config))
}

//! Train/test split plans.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pipeline::Prepared;
use super::EvalError;
use crate::clustering::ClusterAssignment;
use crate::ingest::ActivityLabel;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    RandomWindow,
    LeaveSubjectOut,
    WithinClusterLoso,
    CrossCluster { train_cluster: usize, test_cluster: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    /// RandomWindow only.
    pub test_fraction: f64,
    /// LeaveSubjectOut only: group subjects into this many folds instead of
    /// holding out one subject per fold.
    pub n_folds: Option<usize>,
}

impl SplitPlan {
    pub fn random_window(seed: u64) -> Self {
        Self { kind: SplitKind::RandomWindow, seed, test_fraction: 0.3, n_folds: None }
    }

    pub fn leave_subject_out(seed: u64) -> Self {
        Self { kind: SplitKind::LeaveSubjectOut, seed, test_fraction: 0.3, n_folds: None }
    }

    pub fn grouped(seed: u64, n_folds: usize) -> Self {
        Self { n_folds: Some(n_folds), ..Self::leave_subject_out(seed) }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            SplitKind::RandomWindow => format!("random_window(test_fraction={})", self.test_fraction),
            SplitKind::LeaveSubjectOut => match self.n_folds {
                Some(k) => format!("leave_subject_out(folds={k})"),
                None => "leave_subject_out".into(),
            },
            SplitKind::WithinClusterLoso => "within_cluster_loso".into(),
            SplitKind::CrossCluster { train_cluster, test_cluster } => {
                format!("cross_cluster({train_cluster}->{test_cluster})")
            }
        }
    }

    /// Whether the plan keeps every subject on one side of each fold.
    pub fn subject_disjoint(&self) -> bool {
        self.kind != SplitKind::RandomWindow
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub id: usize,
    /// Held-out subject ids joined by `+`, or `random` for window splits.
    pub held_out: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn subject_fold(data: &Prepared, id: usize, held: &BTreeSet<&str>, pool: Option<&BTreeSet<&str>>) -> Fold {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, w) in data.windows.iter().enumerate() {
        let s = w.subject_id.as_str();
        if held.contains(s) {
            test.push(i);
        } else if pool.is_none_or(|p| p.contains(s)) {
            train.push(i);
        }
    }
    Fold { id, held_out: held.iter().copied().collect::<Vec<_>>().join("+"), train, test }
}

/// Stratified random window split: per label, `round(fraction · n)` windows go
/// to test.
fn random_window(data: &Prepared, plan: &SplitPlan) -> Fold {
    let mut by_label: BTreeMap<ActivityLabel, Vec<usize>> = BTreeMap::new();
    for (i, w) in data.windows.iter().enumerate() {
        by_label.entry(w.label).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in by_label {
        let mut rng = seed::rng(seed::derive_seed(plan.seed, &[0x5217, label.index() as u64]));
        idx.shuffle(&mut rng);
        let n_test = (plan.test_fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Fold { id: 0, held_out: "random".into(), train, test }
}

/// Subject groups for leave-subject-out; identical for any windowing of the
/// same subjects.
pub fn subject_groups(subjects: &[String], plan: &SplitPlan) -> Vec<Vec<String>> {
    match plan.n_folds {
        Some(k) if k < subjects.len() => {
            let mut order = subjects.to_vec();
            order.shuffle(&mut seed::rng(seed::derive_seed(plan.seed, &[0x1050])));
            let mut groups = vec![Vec::new(); k];
            for (i, s) in order.into_iter().enumerate() {
                groups[i % k].push(s);
            }
            groups.iter_mut().for_each(|g| g.sort());
            groups.sort();
            groups
        }
        _ => subjects.iter().map(|s| vec![s.clone()]).collect(),
    }
}

/// Materialize the folds of a plan. Cluster plans need an assignment.
pub fn make_folds(
    data: &Prepared,
    plan: &SplitPlan,
    assignment: Option<&ClusterAssignment>,
) -> Result<Vec<Fold>, EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptySplit("no windows".into()));
    }
    let subjects = data.subjects();
    let members = |c: usize| -> Result<BTreeSet<&str>, EvalError> {
        let a = assignment.ok_or_else(|| EvalError::Config("split needs a cluster assignment".into()))?;
        Ok(subjects.iter().filter(|s| a.get(*s) == Some(&c)).map(String::as_str).collect())
    };
    let folds = match plan.kind {
        SplitKind::RandomWindow => {
            if !(plan.test_fraction > 0.0 && plan.test_fraction < 1.0) {
                return Err(EvalError::Config(format!("test_fraction {}", plan.test_fraction)));
            }
            vec![random_window(data, plan)]
        }
        SplitKind::LeaveSubjectOut => subject_groups(&subjects, plan)
            .iter()
            .enumerate()
            .map(|(id, g)| subject_fold(data, id, &g.iter().map(String::as_str).collect(), None))
            .collect(),
        SplitKind::WithinClusterLoso => {
            let a = assignment.ok_or_else(|| EvalError::Config("split needs a cluster assignment".into()))?;
            let k = a.values().max().map_or(0, |m| m + 1);
            let mut folds = Vec::new();
            for c in 0..k {
                let pool = members(c)?;
                if pool.len() < 2 {
                    continue;
                }
                for s in &pool {
                    let id = folds.len();
                    folds.push(subject_fold(data, id, &BTreeSet::from([*s]), Some(&pool)));
                }
            }
            folds
        }
        SplitKind::CrossCluster { train_cluster, test_cluster } => {
            let train = members(train_cluster)?;
            let test = members(test_cluster)?;
            if train.is_empty() {
                return Err(EvalError::EmptyCluster(train_cluster));
            }
            if test.is_empty() {
                return Err(EvalError::EmptyCluster(test_cluster));
            }
            let mut f = subject_fold(data, 0, &test, Some(&train));
            if train_cluster == test_cluster {
                f.train = f.test.clone();
            }
            f.held_out = format!("cluster{test_cluster}");
            vec![f]
        }
    };
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::pipeline::{prepare, InputSpec};
    use crate::ingest::{generate_synthetic, SyntheticCohortSpec};
    use crate::preprocess::WindowConfig;

    fn data() -> Prepared {
        let c = generate_synthetic(&SyntheticCohortSpec::new(6, 2, 1)).unwrap();
        prepare(&c.series, WindowConfig::new(50, 10).unwrap(), &InputSpec::default()).unwrap()
    }

    #[test]
    fn loso_partitions_subjects() {
        let d = data();
        for plan in [SplitPlan::leave_subject_out(1), SplitPlan::grouped(1, 4)] {
            let folds = make_folds(&d, &plan, None).unwrap();
            let mut held: Vec<String> = Vec::new();
            for f in &folds {
                assert_eq!(f.train.len() + f.test.len(), d.len());
                let tr: BTreeSet<&str> = f.train.iter().map(|&i| d.windows[i].subject_id.as_str()).collect();
                for &i in &f.test {
                    assert!(!tr.contains(d.windows[i].subject_id.as_str()));
                }
                held.extend(f.held_out.split('+').map(String::from));
            }
            held.sort();
            assert_eq!(held, d.subjects());
        }
    }

    #[test]
    fn random_window_is_stratified() {
        let d = data();
        let f = &make_folds(&d, &SplitPlan::random_window(3), None).unwrap()[0];
        for l in ActivityLabel::ALL {
            let total = d.windows.iter().filter(|w| w.label == l).count() as f64;
            let test = f.test.iter().filter(|&&i| d.windows[i].label == l).count() as f64;
            assert!((test / total - 0.3).abs() <= 0.05, "{l}: {}", test / total);
        }
    }

    #[test]
    fn cluster_splits() {
        let d = data();
        let a: ClusterAssignment = d.subjects().into_iter().enumerate().map(|(i, s)| (s, usize::from(i >= 2))).collect();
        let plan = SplitPlan { kind: SplitKind::WithinClusterLoso, ..SplitPlan::leave_subject_out(1) };
        assert_eq!(make_folds(&d, &plan, Some(&a)).unwrap().len(), 6);
        let cross = SplitPlan { kind: SplitKind::CrossCluster { train_cluster: 0, test_cluster: 2 }, ..plan };
        assert!(matches!(make_folds(&d, &cross, Some(&a)), Err(EvalError::EmptyCluster(2))));
    }
}

//! Experiment harness: splits, metrics, the experiment families, permutation
//! importance and misclassification timelines.
//!
//! Folds and grid cells run concurrently on the ambient rayon pool; each job
//! derives its own seed from the plan seed and its identity, and results are
//! assembled in job order, so reports do not depend on the worker count.

use thiserror::Error;

mod experiments;
mod importance;
mod metrics;
mod pipeline;
mod report;
mod split;
mod timeline;

pub use experiments::{
    cross_cluster_eval, evaluate, evaluate_folds, route_windows, routed_eval, run_sweep, within_cluster_loso,
    write_sweep_summary, ClusterLoso, Routing, SubjectScore, SweepCell, WithinClusterReport,
};
pub use importance::{permutation_importance, ImportanceEntry, ImportanceReport, MIN_REPEATS};
pub use metrics::{accuracy, balanced_accuracy, ConfusionMatrix};
pub use pipeline::{
    fit_pipeline, prepare, prepare_windows, InputSpec, ModelSpec, Prepared, TrainedModel, TrainedPipeline,
};
pub use report::{ConfigEcho, EvalReport, FoldRecord, REPORT_SCHEMA_VERSION};
pub use split::{make_folds, subject_groups, Fold, SplitKind, SplitPlan};
pub use timeline::{
    covering_window, misclassification_timeline, transition_error_rates, write_timeline_csv, TimelineRow,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cluster {0} has no subjects")]
    EmptyCluster(usize),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("series of length {got} too short for window {needed}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Preprocess(#[from] crate::preprocess::PreprocessError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Cluster(#[from] crate::clustering::ClusterError),
    #[error(transparent)]
    Svm(#[from] crate::svm::SvmError),
    #[error(transparent)]
    Net(#[from] crate::neuralnet::NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

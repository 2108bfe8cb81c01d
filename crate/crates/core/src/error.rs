use thiserror::Error;

use crate::clustering::ClusterError;
use crate::evaluation::EvalError;
use crate::features::FeatureError;
use crate::ingest::IngestError;
use crate::neuralnet::NetError;
use crate::preprocess::PreprocessError;
use crate::svm::SvmError;

/// Crate-wide error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

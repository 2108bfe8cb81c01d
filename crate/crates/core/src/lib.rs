//! Activity classification from wearable heart-rate time series.
//!
//! The crate covers the whole pipeline: parsing annotated BPM corpora (or
//! generating seeded synthetic cohorts), windowing and standardization,
//! handcrafted feature families, grouping subjects with k-means, one-against-one
//! kernel SVMs, small 1-D convolutional networks that fuse handcrafted
//! features, and an evaluation harness for split strategies, cluster-routed
//! classifiers, permutation importance and misclassification timelines.
//!
//! Runnable walkthroughs for each capability live in `examples/`; the
//! `hrgroup` binary wraps the experiment runner in [`runner`].

pub mod clustering;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod neuralnet;
pub mod preprocess;
pub mod runner;
pub mod seed;
pub mod svm;

mod error;

pub use error::{Error, Result};
pub use ingest::{ActivityLabel, HeartRateSample, SubjectSeries};

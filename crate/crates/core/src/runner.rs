//! Reproducible experiment runs behind the `hrgroup` command line.
//!
//! Every command resolves an [`ExperimentConfig`] (TOML file, then flag
//! overrides), writes its artifacts into a scratch directory and renames it
//! to `<out>/<command>-<hash>` once complete. The hash covers the command and
//! the effective config, and `manifest.json` lists every artifact with its
//! SHA-256, so identical configs give identical run directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{fit_profile_clusters, fit_window_space, ClusterReport, ClusterSpace, KMeansConfig};
use crate::evaluation::{
    evaluate, fit_pipeline, make_folds, misclassification_timeline, permutation_importance, prepare, routed_eval,
    run_sweep, write_sweep_summary, write_timeline_csv, EvalError, InputSpec, ModelSpec, Routing, SplitKind,
    SplitPlan,
};
use crate::features::{FeatureSetKind, MfccConfig};
use crate::ingest::{
    generate_synthetic, parse_corpus, resample_uniform, write_corpus, write_corpus_dir, write_gap_report, CsvSchema,
    SubjectSeries, SyntheticCohortSpec,
};
use crate::neuralnet::{ArchitectureId, NetConfig};
use crate::preprocess::{segment_all, StandardizationMode, WindowConfig};
use crate::svm::{KernelKind, KernelSpec, SvmParams};
use crate::Error;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl RunError {
    /// Process exit code: 2 config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Data(_) => 3,
            RunError::Internal(_) => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        use crate::clustering::ClusterError as C;
        use crate::neuralnet::NetError as N;
        use crate::svm::SvmError as S;
        let msg = e.to_string();
        match e {
            Error::Ingest(crate::ingest::IngestError::InvalidSpec(_)) => RunError::Config(msg),
            Error::Ingest(_) | Error::Preprocess(_) | Error::Feature(_) => RunError::Data(msg),
            Error::Cluster(C::InvalidK | C::UnsupportedSpace(_)) => RunError::Config(msg),
            Error::Cluster(C::Io(_) | C::Json(_)) => RunError::Internal(msg),
            Error::Cluster(_) => RunError::Data(msg),
            Error::Svm(S::InvalidParameter(_)) | Error::Net(N::InvalidConfig(_)) => RunError::Config(msg),
            Error::Svm(S::SingleClassInput | S::EmptyInput | S::NonFiniteFeature { .. }) => RunError::Data(msg),
            Error::Net(N::EmptyDataset) => RunError::Data(msg),
            Error::Svm(_) | Error::Net(_) => RunError::Internal(msg),
            Error::Eval(inner) => RunError::from(inner),
        }
    }
}

impl From<EvalError> for RunError {
    fn from(e: EvalError) -> Self {
        let msg = e.to_string();
        match e {
            EvalError::Config(_) => RunError::Config(msg),
            EvalError::Invariant(_) | EvalError::Io(_) | EvalError::Csv(_) | EvalError::Json(_) => {
                RunError::Internal(msg)
            }
            EvalError::EmptyCluster(_) | EvalError::EmptySplit(_) | EvalError::SeriesTooShort { .. } => {
                RunError::Data(msg)
            }
            EvalError::Ingest(x) => Error::from(x).into(),
            EvalError::Preprocess(x) => Error::from(x).into(),
            EvalError::Feature(x) => Error::from(x).into(),
            EvalError::Cluster(x) => Error::from(x).into(),
            EvalError::Svm(x) => Error::from(x).into(),
            EvalError::Net(x) => Error::from(x).into(),
        }
    }
}

macro_rules! from_module_error {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
from_module_error!(
    crate::ingest::IngestError,
    crate::preprocess::PreprocessError,
    crate::clustering::ClusterError
);

fn internal<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Internal(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic,
    Path,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub source: CorpusSource,
    /// File or directory of CSVs when `source = "path"`.
    pub path: Option<PathBuf>,
    pub device: String,
    pub period_s: f64,
    pub subjects: usize,
    pub groups: usize,
    pub lag_tau_s: f64,
    pub noise_std: f64,
    pub noise_ar_coeff: f64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let spec = SyntheticCohortSpec::new(30, 2, 0);
        Self {
            source: CorpusSource::Synthetic,
            path: None,
            device: crate::ingest::DEFAULT_DEVICE.into(),
            period_s: 1.0,
            subjects: spec.n_subjects,
            groups: spec.n_groups,
            lag_tau_s: spec.lag_tau_s,
            noise_std: spec.noise_std,
            noise_ar_coeff: spec.noise_ar_coeff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { sizes: vec![80], strides: vec![10] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureChoice {
    None,
    Base,
    BaseMfcc,
    Statistical,
    Temporal,
    StatTemporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdChoice {
    None,
    DataStd,
    FeatureStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub features: FeatureChoice,
    pub standardized_input: bool,
    pub standardization: StdChoice,
    pub mel_bands: usize,
    pub mfcc_coefficients: usize,
}

impl Default for InputSection {
    fn default() -> Self {
        let m = MfccConfig::default();
        Self {
            features: FeatureChoice::None,
            standardized_input: false,
            standardization: StdChoice::None,
            mel_bands: m.n_mel_bands,
            mfcc_coefficients: m.n_coefficients,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    Net,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchChoice {
    Baseline,
    Model1,
    Model2,
    Model3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub kernel: KernelChoice,
    pub c: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
    pub arch: ArchChoice,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let n = NetConfig::default();
        let s = SvmParams::default();
        Self {
            kind: ModelKind::Svm,
            kernel: KernelChoice::Rbf,
            c: s.c,
            gamma: None,
            tol: s.tol,
            arch: ArchChoice::Baseline,
            epochs: n.epochs,
            batch_size: n.batch_size,
            learning_rate: n.learning_rate,
            dropout: n.dropout_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceChoice {
    MeanBpmProfile,
    StatisticalWindow,
    TemporalWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingChoice {
    None,
    PerWindow,
    PerSubject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub space: SpaceChoice,
    pub k: usize,
    pub routing: RoutingChoice,
    pub restarts: usize,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        Self { space: SpaceChoice::StatisticalWindow, k: 4, routing: RoutingChoice::None, restarts: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    RandomWindow,
    LeaveSubjectOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub kind: SplitChoice,
    pub test_fraction: f64,
    /// Group subjects into this many folds (0 = one subject per fold).
    pub n_folds: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { kind: SplitChoice::LeaveSubjectOut, test_fraction: 0.3, n_folds: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub importance_repeats: usize,
    pub importance_top: usize,
    /// Subject whose timeline is exported; defaults to the first subject.
    pub timeline_subject: Option<String>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { importance_repeats: 5, importance_top: 20, timeline_subject: None }
    }
}

/// Everything that determines a run's artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub corpus: CorpusSection,
    pub windows: WindowSection,
    pub input: InputSection,
    pub model: ModelSection,
    pub clustering: ClusteringSection,
    pub split: SplitSection,
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, RunError> {
        toml::to_string(self).map_err(internal)
    }

    pub fn seed(&self) -> Result<u64, RunError> {
        self.seed.ok_or_else(|| RunError::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn window_configs(&self) -> Result<Vec<WindowConfig>, RunError> {
        if self.windows.sizes.is_empty() || self.windows.strides.is_empty() {
            return Err(RunError::Config("window sizes and strides must be non-empty".into()));
        }
        self.windows
            .sizes
            .iter()
            .flat_map(|&w| self.windows.strides.iter().map(move |&s| WindowConfig::new(w, s)))
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::Config(e.to_string()))
    }

    /// The first (window, stride) pair; single-cell commands use it.
    pub fn window_config(&self) -> Result<WindowConfig, RunError> {
        Ok(self.window_configs()?[0])
    }

    pub fn input_spec(&self) -> InputSpec {
        let i = &self.input;
        InputSpec {
            features: match i.features {
                FeatureChoice::None => None,
                FeatureChoice::Base => Some(FeatureSetKind::Base),
                FeatureChoice::BaseMfcc => Some(FeatureSetKind::BaseMfcc),
                FeatureChoice::Statistical => Some(FeatureSetKind::Statistical),
                FeatureChoice::Temporal => Some(FeatureSetKind::Temporal),
                FeatureChoice::StatTemporal => Some(FeatureSetKind::StatTemporal),
            },
            standardized_input: i.standardized_input,
            standardization: match i.standardization {
                StdChoice::None => StandardizationMode::None,
                StdChoice::DataStd => StandardizationMode::DataStd,
                StdChoice::FeatureStd => StandardizationMode::FeatureStd,
            },
            mfcc: MfccConfig {
                n_mel_bands: i.mel_bands,
                n_coefficients: i.mfcc_coefficients,
                sample_rate_hz: 1.0 / self.corpus.period_s,
            },
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        match m.kind {
            ModelKind::Svm => ModelSpec::Svm(SvmParams {
                kernel: KernelSpec {
                    kind: match m.kernel {
                        KernelChoice::Linear => KernelKind::Linear,
                        KernelChoice::Rbf => KernelKind::Rbf,
                    },
                    gamma: m.gamma,
                },
                c: m.c,
                tol: m.tol,
                ..SvmParams::default()
            }),
            ModelKind::Net => ModelSpec::Net {
                arch: match m.arch {
                    ArchChoice::Baseline => ArchitectureId::Baseline,
                    ArchChoice::Model1 => ArchitectureId::Model1,
                    ArchChoice::Model2 => ArchitectureId::Model2,
                    ArchChoice::Model3 => ArchitectureId::Model3,
                },
                config: NetConfig {
                    epochs: m.epochs,
                    batch_size: m.batch_size,
                    learning_rate: m.learning_rate,
                    dropout_p: m.dropout,
                    ..NetConfig::default()
                },
            },
        }
    }

    pub fn split_plan(&self) -> Result<SplitPlan, RunError> {
        let seed = self.seed()?;
        let s = &self.split;
        Ok(match s.kind {
            SplitChoice::RandomWindow => SplitPlan { test_fraction: s.test_fraction, ..SplitPlan::random_window(seed) },
            SplitChoice::LeaveSubjectOut if s.n_folds > 0 => SplitPlan::grouped(seed, s.n_folds),
            SplitChoice::LeaveSubjectOut => SplitPlan::leave_subject_out(seed),
        })
    }

    fn cluster_space(&self) -> ClusterSpace {
        match self.clustering.space {
            SpaceChoice::MeanBpmProfile => ClusterSpace::MeanBpmProfile,
            SpaceChoice::StatisticalWindow => ClusterSpace::StatisticalWindow,
            SpaceChoice::TemporalWindow => ClusterSpace::TemporalWindow,
        }
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticCohortSpec, RunError> {
        let c = &self.corpus;
        let mut spec = SyntheticCohortSpec::new(c.subjects, c.groups, self.seed()?);
        spec.period_s = c.period_s;
        spec.lag_tau_s = c.lag_tau_s;
        spec.noise_std = c.noise_std;
        spec.noise_ar_coeff = c.noise_ar_coeff;
        Ok(spec)
    }

    /// Load (or generate) the corpus, resampled to the configured period.
    pub fn load_corpus(&self) -> Result<Vec<SubjectSeries>, RunError> {
        match self.corpus.source {
            CorpusSource::Synthetic => Ok(generate_synthetic(&self.synthetic_spec()?)?.series),
            CorpusSource::Path => {
                let path = self
                    .corpus
                    .path
                    .as_ref()
                    .ok_or_else(|| RunError::Config("corpus.path is required for source = \"path\"".into()))?;
                let schema = CsvSchema { device_filter: Some(self.corpus.device.clone()), ..CsvSchema::default() };
                let parsed = parse_corpus(path, &schema)?;
                Ok(parsed
                    .iter()
                    .map(|s| resample_uniform(s, self.corpus.period_s).map(|r| r.series))
                    .collect::<Result<_, _>>()?)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hrgroup", version, about = "Activity classification from heart-rate series")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write a synthetic cohort as per-subject CSVs plus groups.json.
    Generate {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        groups: Option<usize>,
    },
    /// Parse, filter and resample a CSV corpus; write it back with a gap report.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Evaluate every (window, stride) cell of the grid.
    Sweep,
    /// Cluster subjects and write the cluster report.
    Cluster,
    /// Fit one classifier on every window and save it.
    Train,
    /// Evaluate under the configured split, optionally with cluster routing.
    Eval,
    /// Permutation importance on the first held-out fold.
    Importance,
    /// Per-timestep prediction timeline for one held-out subject.
    Timeline,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Ingest { .. } => "ingest",
            Command::Sweep => "sweep",
            Command::Cluster => "cluster",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Importance => "importance",
            Command::Timeline => "timeline",
        }
    }
}

/// Config file (if any) with command-line overrides applied.
pub fn effective_config(global: &GlobalArgs, command: &Command) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &global.config {
        Some(p) => ExperimentConfig::from_toml(
            &fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?,
        )?,
        None => ExperimentConfig::default(),
    };
    if global.seed.is_some() {
        cfg.seed = global.seed;
    }
    match command {
        Command::Generate { subjects, groups } => {
            cfg.corpus.source = CorpusSource::Synthetic;
            cfg.corpus.path = None;
            if let Some(n) = subjects {
                cfg.corpus.subjects = *n;
            }
            if let Some(g) = groups {
                cfg.corpus.groups = *g;
            }
        }
        Command::Ingest { corpus: Some(p) } => {
            cfg.corpus.source = CorpusSource::Path;
            cfg.corpus.path = Some(p.clone());
        }
        _ => {}
    }
    cfg.seed()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub run_id: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `<command>-<first 16 hex digits of sha256(command, config)>`.
pub fn run_id(command: &str, cfg: &ExperimentConfig) -> Result<String, RunError> {
    let text = format!("{command}\n{}", cfg.to_toml()?);
    Ok(format!("{command}-{}", &sha256_hex(text.as_bytes())[..16]))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).expect("inside root").to_path_buf());
        }
    }
    Ok(())
}

fn write_manifest(dir: &Path, command: &str, run_id: &str, cfg: &ExperimentConfig) -> Result<(), RunError> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files).map_err(internal)?;
    let artifacts = files
        .iter()
        .map(|rel| {
            let bytes = fs::read(dir.join(rel))?;
            Ok(ArtifactEntry {
                path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(internal)?;
    let manifest = Manifest {
        command: command.into(),
        run_id: run_id.into(),
        seed: cfg.seed()?,
        config: cfg.clone(),
        artifacts,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(internal)?)
        .map_err(internal)
}

/// Run one command; returns the finished run directory.
pub fn run(cli: &Cli) -> Result<PathBuf, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers.unwrap_or(0))
        .build()
        .map_err(internal)?;
    pool.install(|| run_in_pool(cli))
}

fn run_in_pool(cli: &Cli) -> Result<PathBuf, RunError> {
    let cfg = effective_config(&cli.global, &cli.command)?;
    let name = cli.command.name();
    let id = run_id(name, &cfg)?;
    fs::create_dir_all(&cli.global.out).map_err(internal)?;
    let tmp = cli.global.out.join(format!(".{id}.tmp"));
    let done = cli.global.out.join(&id);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(internal)?;
    }
    fs::create_dir_all(&tmp).map_err(internal)?;
    let outcome = execute(&cli.command, &cfg, &tmp).and_then(|()| {
        fs::write(tmp.join("config.toml"), cfg.to_toml()?).map_err(internal)?;
        write_manifest(&tmp, name, &id, &cfg)
    });
    if let Err(e) = outcome {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if done.exists() {
        fs::remove_dir_all(&done).map_err(internal)?;
    }
    fs::rename(&tmp, &done).map_err(internal)?;
    Ok(done)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    fs::write(path, serde_json::to_string_pretty(value).map_err(internal)?).map_err(internal)
}

fn execute(command: &Command, cfg: &ExperimentConfig, dir: &Path) -> Result<(), RunError> {
    let seed = cfg.seed()?;
    match command {
        Command::Generate { .. } => {
            let cohort = generate_synthetic(&cfg.synthetic_spec()?)?;
            let corpus = dir.join("corpus");
            fs::create_dir_all(&corpus).map_err(internal)?;
            write_corpus_dir(&cohort.series, &corpus)?;
            write_json(&dir.join("groups.json"), &cohort.groups)
        }
        Command::Ingest { .. } => {
            let path = cfg
                .corpus
                .path
                .as_ref()
                .ok_or_else(|| RunError::Config("ingest needs --corpus or corpus.path".into()))?;
            let schema = CsvSchema { device_filter: Some(cfg.corpus.device.clone()), ..CsvSchema::default() };
            let parsed = parse_corpus(path, &schema)?;
            let mut series = Vec::new();
            let mut gaps = Vec::new();
            for s in &parsed {
                let r = resample_uniform(s, cfg.corpus.period_s)?;
                series.push(r.series);
                gaps.extend(r.gaps);
            }
            write_corpus(&series, &dir.join("corpus.csv"))?;
            write_gap_report(&gaps, &dir.join("gaps.csv"))?;
            Ok(())
        }
        Command::Sweep => {
            let corpus = cfg.load_corpus()?;
            let cells = run_sweep(
                &corpus,
                &cfg.windows.sizes,
                &cfg.windows.strides,
                &cfg.split_plan()?,
                &cfg.input_spec(),
                &cfg.model_spec(),
            )?;
            let reports = dir.join("reports");
            fs::create_dir_all(&reports).map_err(internal)?;
            for c in &cells {
                c.report.write_json(&reports.join(format!("report_w{}_s{}.json", c.window, c.stride)))?;
            }
            write_sweep_summary(&cells, &dir.join("sweep_summary.csv"))?;
            Ok(())
        }
        Command::Cluster => {
            let corpus = cfg.load_corpus()?;
            let windows = segment_all(&corpus, cfg.window_config()?);
            let kcfg = KMeansConfig { restarts: cfg.clustering.restarts, ..KMeansConfig::new(cfg.clustering.k, seed) };
            let (model, assignment) = match cfg.cluster_space() {
                ClusterSpace::MeanBpmProfile => fit_profile_clusters(&windows, &kcfg)?,
                space => fit_window_space(&windows, space, &kcfg)?,
            };
            ClusterReport::new(&model, &assignment).write_json(&dir.join("clusters.json"))?;
            Ok(())
        }
        Command::Train => {
            let corpus = cfg.load_corpus()?;
            let data = prepare(&corpus, cfg.window_config()?, &cfg.input_spec())?;
            let idx: Vec<usize> = (0..data.len()).collect();
            let model = fit_pipeline(&data, &idx, &cfg.input_spec(), &cfg.model_spec(), seed)?;
            write_json(&dir.join("model.json"), &model)
        }
        Command::Eval => {
            let corpus = cfg.load_corpus()?;
            let wc = cfg.window_config()?;
            let data = prepare(&corpus, wc, &cfg.input_spec())?;
            let plan = cfg.split_plan()?;
            let report = match cfg.clustering.routing {
                RoutingChoice::None => evaluate(&data, &plan, None, &cfg.input_spec(), &cfg.model_spec(), wc.stride)?,
                r => {
                    if plan.kind != SplitKind::LeaveSubjectOut {
                        return Err(RunError::Config("routing needs split.kind = \"leave_subject_out\"".into()));
                    }
                    let routing = if r == RoutingChoice::PerWindow { Routing::PerWindow } else { Routing::PerSubject };
                    routed_eval(
                        &data,
                        cfg.clustering.k,
                        routing,
                        cfg.cluster_space(),
                        &cfg.input_spec(),
                        &cfg.model_spec(),
                        &plan,
                        wc.stride,
                    )?
                }
            };
            report.write_json(&dir.join("report.json"))?;
            report.write_fold_csv(&dir.join("folds.csv"))?;
            report.confusion_matrix.write_csv(&dir.join("confusion.csv")).map_err(internal)?;
            Ok(())
        }
        Command::Importance => {
            let corpus = cfg.load_corpus()?;
            let data = prepare(&corpus, cfg.window_config()?, &cfg.input_spec())?;
            let folds = make_folds(&data, &cfg.split_plan()?, None)?;
            let fold = &folds[0];
            let model = fit_pipeline(&data, &fold.train, &cfg.input_spec(), &cfg.model_spec(), seed)?;
            let rep = permutation_importance(&model, &data, &fold.test, cfg.analysis.importance_repeats, seed)?;
            write_json(&dir.join("importance.json"), &rep)?;
            rep.write_csv(&dir.join("importance.csv"), Some(cfg.analysis.importance_top))?;
            Ok(())
        }
        Command::Timeline => {
            let corpus = cfg.load_corpus()?;
            let subject = match &cfg.analysis.timeline_subject {
                Some(s) => s.clone(),
                None => corpus.first().map(|s| s.subject_id.clone()).ok_or_else(|| RunError::Data("empty corpus".into()))?,
            };
            let (held, rest): (Vec<_>, Vec<_>) = corpus.into_iter().partition(|s| s.subject_id == subject);
            let series = held
                .into_iter()
                .next()
                .ok_or_else(|| RunError::Config(format!("unknown timeline subject {subject}")))?;
            let wc = cfg.window_config()?;
            let data = prepare(&rest, wc, &cfg.input_spec())?;
            let idx: Vec<usize> = (0..data.len()).collect();
            let model = fit_pipeline(&data, &idx, &cfg.input_spec(), &cfg.model_spec(), seed)?;
            let rows = misclassification_timeline(&model, &series, wc)?;
            write_timeline_csv(&rows, &dir.join("timeline.csv"))?;
            Ok(())
        }
    }
}

/// Checksums of every artifact in a finished run directory, keyed by path.
pub fn read_manifest(dir: &Path) -> Result<Manifest, RunError> {
    let text = fs::read_to_string(dir.join("manifest.json")).map_err(internal)?;
    serde_json::from_str(&text).map_err(internal)
}

/// Map of artifact path → checksum, convenient for comparing runs.
pub fn checksums(m: &Manifest) -> BTreeMap<String, String> {
    m.artifacts.iter().map(|a| (a.path.clone(), a.sha256.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = ExperimentConfig { seed: Some(3), ..ExperimentConfig::default() };
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_missing_seed_are_config_errors() {
        assert_eq!(ExperimentConfig::from_toml("bogus = 1").unwrap_err().exit_code(), 2);
        assert_eq!(ExperimentConfig::default().seed().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sections_parse() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            seed = 7
            [windows]
            sizes = [50, 80]
            strides = [10]
            [input]
            features = "stat_temporal"
            standardization = "feature_std"
            [model]
            kind = "net"
            arch = "model2"
            epochs = 3
            [clustering]
            routing = "per_subject"
            k = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.window_configs().unwrap().len(), 2);
        assert_eq!(cfg.input_spec().features, Some(FeatureSetKind::StatTemporal));
        assert!(matches!(cfg.model_spec(), ModelSpec::Net { arch: ArchitectureId::Model2, config } if config.epochs == 3));
    }

    #[test]
    fn run_id_depends_on_config() {
        let a = ExperimentConfig { seed: Some(1), ..ExperimentConfig::default() };
        let b = ExperimentConfig { seed: Some(2), ..ExperimentConfig::default() };
        assert_eq!(run_id("eval", &a).unwrap(), run_id("eval", &a).unwrap());
        assert_ne!(run_id("eval", &a).unwrap(), run_id("eval", &b).unwrap());
        assert_ne!(run_id("eval", &a).unwrap(), run_id("sweep", &a).unwrap());
    }
}

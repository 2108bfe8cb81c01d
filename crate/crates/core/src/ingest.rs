//! Heart-rate corpora: CSV parsing, uniform resampling and seeded synthetic
//! cohorts.
//!
//! A corpus is a set of [`SubjectSeries`], one per (subject, device) pair. The
//! CSV reader accepts any column naming through [`CsvSchema`] and keeps only
//! the configured device stream.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Lower/upper exclusive bounds for a plausible BPM reading.
pub const MIN_BPM: f64 = 20.0;
pub const MAX_BPM: f64 = 250.0;

/// Gaps longer than this many sampling periods are forward-filled.
pub const GAP_FACTOR: f64 = 10.0;

/// Device value identifying the Apple Watch stream.
pub const DEFAULT_DEVICE: &str = "AppleWatch";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unknown activity label `{0}`")]
    UnknownLabel(String),
    #[error("subject {subject}: conflicting labels at duplicate timestamp {timestamp}")]
    NonMonotonicTimestamps { subject: String, timestamp: f64 },
    #[error("subject {subject}: bpm {bpm} at t={timestamp} outside ({MIN_BPM}, {MAX_BPM})")]
    OutOfRangeBpm {
        subject: String,
        timestamp: f64,
        bpm: f64,
    },
    #[error("unparseable timestamp `{0}`")]
    BadTimestamp(String),
    #[error("{file}: timestamps mix ISO-8601 and epoch seconds")]
    MixedTimestampFormats { file: String },
    #[error("unparseable bpm `{0}`")]
    BadBpm(String),
    #[error("empty series")]
    EmptySeries,
    #[error("no CSV files found at {0}")]
    NoInput(PathBuf),
    #[error("invalid synthetic cohort spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The five protocol activities, in protocol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityLabel {
    Rest = 0,
    Breathe = 1,
    Activity = 2,
    RestAC = 3,
    Type = 4,
}

impl ActivityLabel {
    pub const COUNT: usize = 5;
    pub const ALL: [ActivityLabel; 5] = [
        ActivityLabel::Rest,
        ActivityLabel::Breathe,
        ActivityLabel::Activity,
        ActivityLabel::RestAC,
        ActivityLabel::Type,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Rest => "Rest",
            ActivityLabel::Breathe => "Breathe",
            ActivityLabel::Activity => "Activity",
            ActivityLabel::RestAC => "RestAC",
            ActivityLabel::Type => "Type",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLabel {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "rest" => Ok(ActivityLabel::Rest),
            "breathe" | "breath" => Ok(ActivityLabel::Breathe),
            "activity" => Ok(ActivityLabel::Activity),
            "restac" | "restafteractivity" => Ok(ActivityLabel::RestAC),
            "type" | "typing" => Ok(ActivityLabel::Type),
            _ => Err(IngestError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartRateSample {
    /// Seconds since session start.
    pub timestamp: f64,
    pub bpm: f64,
    pub label: ActivityLabel,
}

/// One subject's timestamped BPM samples on one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSeries {
    pub subject_id: String,
    pub device_id: String,
    pub samples: Vec<HeartRateSample>,
}

impl SubjectSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bpm(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.bpm).collect()
    }

    pub fn labels(&self) -> Vec<ActivityLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// Column names used to read a corpus, plus the device filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub subject: String,
    pub device: String,
    pub timestamp: String,
    pub bpm: String,
    pub label: String,
    /// Keep only rows whose device column equals this value.
    pub device_filter: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            subject: "subject_id".into(),
            device: "device".into(),
            timestamp: "timestamp".into(),
            bpm: "bpm".into(),
            label: "label".into(),
            device_filter: Some(DEFAULT_DEVICE.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TimestampFormat {
    Seconds,
    Iso,
}

fn parse_iso(raw: &str) -> Option<f64> {
    let to_secs = |secs: i64, nanos: u32| secs as f64 + f64::from(nanos) * 1e-9;
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Some(to_secs(dt.timestamp(), dt.timestamp_subsec_nanos()));
    }
    const FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];
    FORMATS.iter().find_map(|fmt| {
        chrono::NaiveDateTime::parse_from_str(raw, fmt)
            .ok()
            .map(|dt| {
                let utc = dt.and_utc();
                to_secs(utc.timestamp(), utc.timestamp_subsec_nanos())
            })
    })
}

fn parse_timestamp(raw: &str, fmt: TimestampFormat) -> Option<f64> {
    match fmt {
        TimestampFormat::Seconds => raw.parse::<f64>().ok().filter(|t| t.is_finite() && *t >= 0.0),
        TimestampFormat::Iso => parse_iso(raw),
    }
}

struct RawRow {
    timestamp: f64,
    bpm: f64,
    label: ActivityLabel,
}

fn collect_csv_files(path: &Path) -> Result<Vec<PathBuf>, IngestError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(IngestError::NoInput(path.to_path_buf()));
    }
    Ok(files)
}

/// Parse a CSV file or a directory of CSV files into per-(subject, device)
/// series, sorted by timestamp with duplicate timestamps collapsed to their
/// mean bpm.
pub fn parse_corpus(path: &Path, schema: &CsvSchema) -> Result<Vec<SubjectSeries>, IngestError> {
    type Key = (String, String);
    let mut groups: BTreeMap<Key, (TimestampFormat, Vec<RawRow>)> = BTreeMap::new();

    for file in collect_csv_files(path)? {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&file)?;
        let headers = reader.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
        };
        let (c_subj, c_dev, c_ts, c_bpm, c_lab) = (
            column(&schema.subject)?,
            column(&schema.device)?,
            column(&schema.timestamp)?,
            column(&schema.bpm)?,
            column(&schema.label)?,
        );

        let mut format: Option<TimestampFormat> = None;
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let device = field(c_dev);
            if schema.device_filter.as_deref().is_some_and(|d| d != device) {
                continue;
            }
            let ts_raw = field(c_ts);
            let fmt = *format.get_or_insert_with(|| {
                if ts_raw.parse::<f64>().is_ok() {
                    TimestampFormat::Seconds
                } else {
                    TimestampFormat::Iso
                }
            });
            let timestamp = match parse_timestamp(ts_raw, fmt) {
                Some(t) => t,
                None => {
                    let other = match fmt {
                        TimestampFormat::Seconds => TimestampFormat::Iso,
                        TimestampFormat::Iso => TimestampFormat::Seconds,
                    };
                    if parse_timestamp(ts_raw, other).is_some() {
                        return Err(IngestError::MixedTimestampFormats {
                            file: file.display().to_string(),
                        });
                    }
                    return Err(IngestError::BadTimestamp(ts_raw.to_string()));
                }
            };
            let subject = field(c_subj).to_string();
            let bpm_raw = field(c_bpm);
            let bpm: f64 = bpm_raw
                .parse()
                .map_err(|_| IngestError::BadBpm(bpm_raw.to_string()))?;
            if !(bpm > MIN_BPM && bpm < MAX_BPM) {
                return Err(IngestError::OutOfRangeBpm {
                    subject,
                    timestamp,
                    bpm,
                });
            }
            let label: ActivityLabel = field(c_lab).parse()?;
            let entry = groups
                .entry((subject, device.to_string()))
                .or_insert_with(|| (fmt, Vec::new()));
            if entry.0 != fmt {
                return Err(IngestError::MixedTimestampFormats {
                    file: file.display().to_string(),
                });
            }
            entry.1.push(RawRow { timestamp, bpm, label });
        }
    }

    groups
        .into_iter()
        .map(|((subject_id, device_id), (fmt, mut rows))| {
            rows.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
            let origin = match fmt {
                TimestampFormat::Iso => rows.first().map_or(0.0, |r| r.timestamp),
                TimestampFormat::Seconds => 0.0,
            };
            let samples = collapse_duplicates(&subject_id, &rows, origin)?;
            Ok(SubjectSeries {
                subject_id,
                device_id,
                samples,
            })
        })
        .collect()
}

fn collapse_duplicates(
    subject: &str,
    rows: &[RawRow],
    origin: f64,
) -> Result<Vec<HeartRateSample>, IngestError> {
    let mut out = Vec::with_capacity(rows.len());
    for run in rows.chunk_by(|a, b| a.timestamp == b.timestamp) {
        let label = run[0].label;
        if run.iter().any(|r| r.label != label) {
            return Err(IngestError::NonMonotonicTimestamps {
                subject: subject.to_string(),
                timestamp: run[0].timestamp - origin,
            });
        }
        let bpm = run.iter().map(|r| r.bpm).sum::<f64>() / run.len() as f64;
        out.push(HeartRateSample {
            timestamp: run[0].timestamp - origin,
            bpm,
            label,
        });
    }
    Ok(out)
}

fn write_rows<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    series: &SubjectSeries,
) -> Result<(), IngestError> {
    for s in &series.samples {
        writer.write_record([
            series.subject_id.as_str(),
            series.device_id.as_str(),
            &s.timestamp.to_string(),
            &s.bpm.to_string(),
            s.label.name(),
        ])?;
    }
    Ok(())
}

const CSV_HEADER: [&str; 5] = ["subject_id", "device", "timestamp", "bpm", "label"];

/// Write series to a single CSV in the default schema. Floats use the
/// shortest round-trip representation so parse → write → parse is exact.
pub fn write_corpus(series: &[SubjectSeries], path: &Path) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CSV_HEADER)?;
    for s in series {
        write_rows(&mut writer, s)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write one `<subject_id>.csv` per series into `dir`. Returns the file paths
/// in input order.
pub fn write_corpus_dir(series: &[SubjectSeries], dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    fs::create_dir_all(dir)?;
    series
        .iter()
        .map(|s| {
            let path = dir.join(format!("{}.csv", s.subject_id));
            let mut writer = csv::Writer::from_path(&path)?;
            writer.write_record(CSV_HEADER)?;
            write_rows(&mut writer, s)?;
            writer.flush()?;
            Ok(path)
        })
        .collect()
}

/// Interval `(start_s, end_s]` that was forward-filled during resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub subject_id: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub series: SubjectSeries,
    pub gaps: Vec<Gap>,
}

/// Resample onto the grid `t0, t0 + p, ...` up to the last original timestamp.
///
/// BPM is linearly interpolated, labels come from the nearest original sample
/// (ties to the earlier one). Between samples further apart than
/// `GAP_FACTOR * period_s` the bpm is forward-filled and the interval is
/// reported as a [`Gap`].
pub fn resample_uniform(series: &SubjectSeries, period_s: f64) -> Result<Resampled, IngestError> {
    let src = &series.samples;
    let Some(first) = src.first() else {
        return Err(IngestError::EmptySeries);
    };
    if !(period_s > 0.0 && period_s.is_finite()) {
        return Err(IngestError::InvalidSpec(format!("period {period_s} must be positive")));
    }
    let t0 = first.timestamp;
    let t_last = src[src.len() - 1].timestamp;
    let steps = ((t_last - t0) / period_s + 1e-9).floor() as usize;
    let gap_limit = GAP_FACTOR * period_s;

    let gaps = src
        .windows(2)
        .filter(|w| w[1].timestamp - w[0].timestamp > gap_limit)
        .map(|w| Gap {
            subject_id: series.subject_id.clone(),
            start_s: w[0].timestamp,
            end_s: w[1].timestamp,
        })
        .collect();

    let mut samples = Vec::with_capacity(steps + 1);
    let mut j = 0usize;
    for k in 0..=steps {
        let t = t0 + k as f64 * period_s;
        while j + 1 < src.len() && src[j + 1].timestamp <= t {
            j += 1;
        }
        let a = &src[j];
        let sample = if a.timestamp == t || j + 1 == src.len() {
            HeartRateSample { timestamp: t, bpm: a.bpm, label: a.label }
        } else {
            let b = &src[j + 1];
            let span = b.timestamp - a.timestamp;
            let bpm = if span > gap_limit {
                a.bpm
            } else {
                a.bpm + (b.bpm - a.bpm) * (t - a.timestamp) / span
            };
            let label = if t - a.timestamp <= b.timestamp - t { a.label } else { b.label };
            HeartRateSample { timestamp: t, bpm, label }
        };
        samples.push(sample);
    }

    Ok(Resampled {
        series: SubjectSeries {
            subject_id: series.subject_id.clone(),
            device_id: series.device_id.clone(),
            samples,
        },
        gaps,
    })
}

/// Write a gap report CSV (`subject_id, gap_start_s, gap_end_s`).
pub fn write_gap_report(gaps: &[Gap], path: &Path) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["subject_id", "gap_start_s", "gap_end_s"])?;
    for g in gaps {
        writer.write_record([g.subject_id.as_str(), &g.start_s.to_string(), &g.end_s.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Parameters of a synthetic cohort following the five-segment protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohortSpec {
    pub n_subjects: usize,
    pub n_groups: usize,
    pub seed: u64,
    pub period_s: f64,
    /// Durations of Rest, Breathe, Activity, RestAC, Type.
    pub segment_durations_s: [f64; 5],
    /// Per-group BPM offsets added to each subject's baseline, per activity.
    pub group_offset_profiles: Vec<[f64; 5]>,
    pub lag_tau_s: f64,
    pub noise_ar_coeff: f64,
    /// Stationary standard deviation of the AR(1) noise.
    pub noise_std: f64,
}

/// Built-in offset profiles; groups beyond six reuse them with a level shift.
const DEFAULT_PROFILES: [[f64; 5]; 6] = [
    [0.0, 4.0, 28.0, 10.0, 3.0],
    [22.0, 27.0, 42.0, 31.0, 25.0],
    [-8.0, -3.0, 48.0, 14.0, -5.0],
    [10.0, 16.0, 62.0, 28.0, 12.0],
    [-15.0, -12.0, 16.0, -3.0, -13.0],
    [32.0, 36.0, 72.0, 46.0, 34.0],
];

pub fn default_offset_profiles(n_groups: usize) -> Vec<[f64; 5]> {
    (0..n_groups)
        .map(|g| {
            let shift = 5.0 * (g / DEFAULT_PROFILES.len()) as f64;
            DEFAULT_PROFILES[g % DEFAULT_PROFILES.len()].map(|v| v + shift)
        })
        .collect()
}

impl SyntheticCohortSpec {
    pub fn new(n_subjects: usize, n_groups: usize, seed: u64) -> Self {
        Self {
            n_subjects,
            n_groups,
            seed,
            period_s: 1.0,
            segment_durations_s: [240.0, 60.0, 300.0, 120.0, 60.0],
            group_offset_profiles: default_offset_profiles(n_groups),
            lag_tau_s: 20.0,
            noise_ar_coeff: 0.8,
            noise_std: 1.5,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |m: String| Err(IngestError::InvalidSpec(m));
        if self.n_subjects == 0 || self.n_groups == 0 {
            return fail("n_subjects and n_groups must be positive".into());
        }
        if self.n_groups > self.n_subjects {
            return fail(format!(
                "n_groups ({}) exceeds n_subjects ({})",
                self.n_groups, self.n_subjects
            ));
        }
        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return fail("period_s must be positive".into());
        }
        if self.segment_durations_s.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return fail("segment durations must be positive".into());
        }
        if self.group_offset_profiles.len() != self.n_groups {
            return fail(format!(
                "{} offset profiles for {} groups",
                self.group_offset_profiles.len(),
                self.n_groups
            ));
        }
        if self.group_offset_profiles.iter().flatten().any(|v| !v.is_finite()) {
            return fail("offset profiles must be finite".into());
        }
        if !(self.lag_tau_s >= 0.0 && self.lag_tau_s.is_finite()) {
            return fail("lag_tau_s must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.noise_ar_coeff) {
            return fail("noise_ar_coeff must lie in [0, 1)".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail("noise_std must be non-negative".into());
        }
        Ok(())
    }

    /// Number of samples in each protocol segment.
    pub fn segment_lengths(&self) -> [usize; 5] {
        self.segment_durations_s
            .map(|d| ((d / self.period_s).round() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub series: Vec<SubjectSeries>,
    /// Latent group of each subject.
    pub groups: BTreeMap<String, usize>,
    /// Resting baseline drawn for each subject.
    pub baselines: BTreeMap<String, f64>,
}

pub fn subject_name(i: usize) -> String {
    format!("S{:03}", i + 1)
}

/// Generate a cohort: subject `i` belongs to group `i % n_groups`, draws a
/// baseline from N(65, 8) clamped to [45, 100], follows its group's per-segment
/// targets through a first-order lag, and carries stationary AR(1) noise.
pub fn generate_synthetic(spec: &SyntheticCohortSpec) -> Result<SyntheticCohort, IngestError> {
    spec.validate()?;
    let lengths = spec.segment_lengths();
    let total: usize = lengths.iter().sum();
    let labels: Vec<ActivityLabel> = lengths
        .iter()
        .zip(ActivityLabel::ALL)
        .flat_map(|(&n, label)| std::iter::repeat_n(label, n))
        .collect();
    let alpha = if spec.lag_tau_s > 0.0 {
        1.0 - (-spec.period_s / spec.lag_tau_s).exp()
    } else {
        1.0
    };
    let phi = spec.noise_ar_coeff;
    let innovation = spec.noise_std * (1.0 - phi * phi).sqrt();
    let baseline_dist = Normal::new(65.0, 8.0).expect("valid normal");

    let mut cohort = SyntheticCohort {
        series: Vec::with_capacity(spec.n_subjects),
        groups: BTreeMap::new(),
        baselines: BTreeMap::new(),
    };
    for i in 0..spec.n_subjects {
        let id = subject_name(i);
        let group = i % spec.n_groups;
        let mut rng = seed::rng(seed::derive_seed(spec.seed, &[0x5EB1, i as u64]));
        let baseline = Distribution::<f64>::sample(&baseline_dist, &mut rng).clamp(45.0, 100.0);
        let profile = &spec.group_offset_profiles[group];

        let mut level = baseline + profile[labels[0].index()];
        let mut noise = {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.noise_std * z
        };
        let mut samples = Vec::with_capacity(total);
        for (n, &label) in labels.iter().enumerate() {
            let target = baseline + profile[label.index()];
            if n > 0 {
                level += alpha * (target - level);
                let z: f64 = StandardNormal.sample(&mut rng);
                noise = phi * noise + innovation * z;
            }
            samples.push(HeartRateSample {
                timestamp: n as f64 * spec.period_s,
                bpm: (level + noise).clamp(MIN_BPM + 5.0, MAX_BPM - 10.0),
                label,
            });
        }
        cohort.groups.insert(id.clone(), group);
        cohort.baselines.insert(id.clone(), baseline);
        cohort.series.push(SubjectSeries {
            subject_id: id,
            device_id: DEFAULT_DEVICE.to_string(),
            samples,
        });
    }
    Ok(cohort)
}

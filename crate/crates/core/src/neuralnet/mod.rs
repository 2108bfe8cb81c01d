//! Small 1-D convolutional networks, optionally fused with handcrafted
//! features, with hand-written backpropagation and Adam training.
//!
//! Four architectures share one trunk (`conv → ReLU → dropout → maxpool →
//! flatten → FC → ReLU`):
//!
//! * [`ArchitectureId::Baseline`]: trunk, then the class layer.
//! * [`ArchitectureId::Model1`]: trunk output concatenated with the HC vector,
//!   a hidden FC layer, then the class layer.
//! * [`ArchitectureId::Model2`]: the raw window and HC vector are concatenated
//!   into one longer sequence that goes through the baseline stack.
//! * [`ArchitectureId::Model3`]: HC features pass through their own FC + ReLU
//!   before being concatenated with the trunk output.
//!
//! All parameters live in one flat `Vec<f64>` described by [`Layout`].

mod forward;
mod train;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub use forward::{softmax, Cache, Mode};
pub use train::{gradient_check, train, NetDataset, TrainingLog};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("label {0} out of range")]
    BadLabel(usize),
    #[error("unsupported model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchitectureId {
    Baseline,
    Model1,
    Model2,
    Model3,
}

impl ArchitectureId {
    pub const ALL: [ArchitectureId; 4] = [Self::Baseline, Self::Model1, Self::Model2, Self::Model3];

    pub fn name(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Model1 => "model1",
            Self::Model2 => "model2",
            Self::Model3 => "model3",
        }
    }
}

impl std::str::FromStr for ArchitectureId {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| NetError::InvalidConfig(format!("unknown architecture {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub window_size: usize,
    pub hc_dim: usize,
    pub conv_channels: usize,
    pub conv_kernel: usize,
    pub pool: usize,
    pub dropout_p: f64,
    pub fc1_out: usize,
    pub hc_fc_out: usize,
    pub n_classes: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            window_size: 80,
            hc_dim: 0,
            conv_channels: 16,
            conv_kernel: 5,
            pool: 2,
            dropout_p: 0.3,
            fc1_out: 64,
            hc_fc_out: 32,
            n_classes: 5,
            seed: 0,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 50,
            batch_size: 32,
        }
    }
}

impl NetConfig {
    pub fn new(window_size: usize, hc_dim: usize, seed: u64) -> Self {
        Self { window_size, hc_dim, seed, ..Self::default() }
    }

    /// Length of the sequence fed to the convolution.
    pub fn conv_input_len(&self, arch: ArchitectureId) -> usize {
        match arch {
            ArchitectureId::Model2 => self.window_size + self.hc_dim,
            _ => self.window_size,
        }
    }

    pub fn validate(&self, arch: ArchitectureId) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::InvalidConfig(m.to_string()));
        if self.conv_channels == 0 || self.conv_kernel == 0 || self.pool == 0 {
            return bad("conv channels, kernel and pool must be positive");
        }
        if self.fc1_out == 0 || self.hc_fc_out == 0 || self.n_classes < 2 {
            return bad("layer widths must be positive and n_classes >= 2");
        }
        if self.window_size < self.conv_kernel {
            return bad("window shorter than the convolution kernel");
        }
        if (self.conv_input_len(arch) - self.conv_kernel + 1) < self.pool {
            return bad("convolution output shorter than the pooling size");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must lie in [0, 1)");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.batch_size == 0 {
            return bad("learning rate and batch size must be positive");
        }
        match arch {
            ArchitectureId::Baseline if self.hc_dim != 0 => bad("baseline takes no HC features"),
            ArchitectureId::Model1 | ArchitectureId::Model3 if self.hc_dim == 0 => {
                bad("fusion architectures need hc_dim > 0")
            }
            _ => Ok(()),
        }
    }
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub arch: ArchitectureId,
    pub input_len: usize,
    pub hc_dim: usize,
    pub channels: usize,
    pub kernel: usize,
    pub conv_len: usize,
    pub pool: usize,
    pub pooled_len: usize,
    pub flat: usize,
    pub h1: usize,
    pub hc_hidden: usize,
    pub mid_in: usize,
    pub mid: usize,
    pub classes: usize,
    pub conv_w: usize,
    pub conv_b: usize,
    pub fc1_w: usize,
    pub fc1_b: usize,
    pub hc_w: usize,
    pub hc_b: usize,
    pub mid_w: usize,
    pub mid_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(arch: ArchitectureId, cfg: &NetConfig) -> Self {
        let input_len = cfg.conv_input_len(arch);
        let conv_len = input_len - cfg.conv_kernel + 1;
        let pooled_len = conv_len / cfg.pool;
        let flat = cfg.conv_channels * pooled_len;
        let h1 = cfg.fc1_out;
        let (hc_hidden, mid_in, mid) = match arch {
            ArchitectureId::Baseline | ArchitectureId::Model2 => (0, 0, 0),
            ArchitectureId::Model1 => (0, h1 + cfg.hc_dim, h1),
            ArchitectureId::Model3 => (cfg.hc_fc_out, h1 + cfg.hc_fc_out, h1),
        };
        let head_in = if mid > 0 { mid } else { h1 };
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let conv_w = take(cfg.conv_channels * cfg.conv_kernel);
        let conv_b = take(cfg.conv_channels);
        let fc1_w = take(h1 * flat);
        let fc1_b = take(h1);
        let hc_w = take(hc_hidden * cfg.hc_dim);
        let hc_b = take(hc_hidden);
        let mid_w = take(mid * mid_in);
        let mid_b = take(mid);
        let out_w = take(cfg.n_classes * head_in);
        let out_b = take(cfg.n_classes);
        Self {
            arch,
            input_len,
            hc_dim: cfg.hc_dim,
            channels: cfg.conv_channels,
            kernel: cfg.conv_kernel,
            conv_len,
            pool: cfg.pool,
            pooled_len,
            flat,
            h1,
            hc_hidden,
            mid_in,
            mid,
            classes: cfg.n_classes,
            conv_w,
            conv_b,
            fc1_w,
            fc1_b,
            hc_w,
            hc_b,
            mid_w,
            mid_b,
            out_w,
            out_b,
            total: at,
        }
    }

    pub fn head_in(&self) -> usize {
        if self.mid > 0 {
            self.mid
        } else {
            self.h1
        }
    }

    /// (offset, count, fan_in) for each tensor, in storage order.
    fn blocks(&self) -> [(usize, usize, usize); 10] {
        [
            (self.conv_w, self.channels * self.kernel, self.kernel),
            (self.conv_b, self.channels, self.kernel),
            (self.fc1_w, self.h1 * self.flat, self.flat),
            (self.fc1_b, self.h1, self.flat),
            (self.hc_w, self.hc_hidden * self.hc_dim, self.hc_dim),
            (self.hc_b, self.hc_hidden, self.hc_dim),
            (self.mid_w, self.mid * self.mid_in, self.mid_in),
            (self.mid_b, self.mid, self.mid_in),
            (self.out_w, self.classes * self.head_in(), self.head_in()),
            (self.out_b, self.classes, self.head_in()),
        ]
    }
}

/// Parameter count from the layer sizes alone, independent of [`Layout`].
pub fn closed_form_param_count(arch: ArchitectureId, cfg: &NetConfig) -> usize {
    let c = cfg.conv_channels;
    let k = cfg.conv_kernel;
    let l = cfg.conv_input_len(arch);
    let flat = c * ((l - k + 1) / cfg.pool);
    let h = cfg.fc1_out;
    let n = cfg.n_classes;
    let f = cfg.hc_dim;
    let g = cfg.hc_fc_out;
    let trunk = c * k + c + h * flat + h;
    match arch {
        ArchitectureId::Baseline | ArchitectureId::Model2 => trunk + n * h + n,
        ArchitectureId::Model1 => trunk + h * (h + f) + h + n * h + n,
        ArchitectureId::Model3 => trunk + g * f + g + h * (h + g) + h + n * h + n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub arch: ArchitectureId,
    pub config: NetConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
    pub log: TrainingLog,
}

impl NetModel {
    /// Build a network with uniform fan-in initialization `U(−1/√fan_in, 1/√fan_in)`.
    pub fn build(arch: ArchitectureId, cfg: &NetConfig) -> Result<Self, NetError> {
        cfg.validate(arch)?;
        let layout = Layout::new(arch, cfg);
        let expected = closed_form_param_count(arch, cfg);
        if layout.total != expected {
            return Err(NetError::InvalidConfig(format!(
                "layout has {} parameters, closed form gives {expected}",
                layout.total
            )));
        }
        let mut rng = seed::rng(seed::derive_seed(cfg.seed, &[0x1417]));
        let mut params = vec![0.0; layout.total];
        for (offset, count, fan_in) in layout.blocks() {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            for p in &mut params[offset..offset + count] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { arch, config: *cfg, layout, params, log: TrainingLog::default() })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Class scores for a batch.
    pub fn forward(&self, windows: &[Vec<f64>], hc: &[Vec<f64>], mode: Mode) -> Result<Vec<Vec<f64>>, NetError> {
        if windows.len() != hc.len() {
            return Err(NetError::ShapeMismatch { expected: windows.len(), got: hc.len() });
        }
        windows
            .iter()
            .zip(hc)
            .enumerate()
            .map(|(i, (w, h))| {
                self.check_shapes(w, h)?;
                Ok(forward::forward_one(&self.layout, &self.params, w, h, mode.for_sample(i as u64), self.config.dropout_p)
                    .scores)
            })
            .collect()
    }

    pub fn check_shapes(&self, window: &[f64], hc: &[f64]) -> Result<(), NetError> {
        if window.len() != self.config.window_size {
            return Err(NetError::ShapeMismatch { expected: self.config.window_size, got: window.len() });
        }
        if hc.len() != self.config.hc_dim {
            return Err(NetError::ShapeMismatch { expected: self.config.hc_dim, got: hc.len() });
        }
        Ok(())
    }

    /// Eval-mode class index (ties to the lowest index).
    pub fn predict(&self, window: &[f64], hc: &[f64]) -> Result<usize, NetError> {
        self.check_shapes(window, hc)?;
        let scores = forward::forward_one(&self.layout, &self.params, window, hc, Mode::Eval, 0.0).scores;
        Ok(argmax(&scores))
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let file = NetModelFile { format: NET_FORMAT.into(), version: NET_VERSION, model: self.clone() };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let file: NetModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.format != NET_FORMAT || file.version != NET_VERSION {
            return Err(NetError::BadModelFile(format!("{} v{}", file.format, file.version)));
        }
        let m = file.model;
        if Layout::new(m.arch, &m.config) != m.layout || m.params.len() != m.layout.total {
            return Err(NetError::BadModelFile("layout does not match config".into()));
        }
        Ok(m)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

const NET_FORMAT: &str = "hrgroup-net";
const NET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NetModelFile {
    format: String,
    version: u32,
    model: NetModel,
}

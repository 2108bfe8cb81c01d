//! Mini-batch Adam training and finite-difference gradient checking.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forward::{backward_one, cross_entropy, forward_one, loss_grad, Mode};
use super::{NetError, NetModel};
use crate::seed;

/// Parallel arrays of raw windows, HC vectors and class indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetDataset {
    pub windows: Vec<Vec<f64>>,
    pub hc: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl NetDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Eval-mode mean loss over the training set before the first update.
    pub initial_loss: f64,
    /// Mean train-mode mini-batch loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// Eval-mode mean loss over the training set after each epoch.
    pub eval_loss: Vec<f64>,
}

fn check_dataset(model: &NetModel, data: &NetDataset) -> Result<(), NetError> {
    if data.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    if data.windows.len() != data.len() || data.hc.len() != data.len() {
        return Err(NetError::ShapeMismatch { expected: data.len(), got: data.windows.len().min(data.hc.len()) });
    }
    for ((w, h), &y) in data.windows.iter().zip(&data.hc).zip(&data.labels) {
        model.check_shapes(w, h)?;
        if y >= model.config.n_classes {
            return Err(NetError::BadLabel(y));
        }
    }
    Ok(())
}

impl NetModel {
    /// Eval-mode mean cross-entropy over a dataset.
    pub fn mean_loss(&self, data: &NetDataset) -> f64 {
        let total: f64 = (0..data.len())
            .map(|i| {
                let c = forward_one(&self.layout, &self.params, &data.windows[i], &data.hc[i], Mode::Eval, 0.0);
                cross_entropy(&c.scores, data.labels[i])
            })
            .sum();
        total / data.len() as f64
    }

    /// Gradient of the mean loss over `idx`, plus that loss.
    fn batch_gradient(&self, data: &NetDataset, idx: &[usize], mode: Mode, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let w = 1.0 / idx.len() as f64;
        let mut loss = 0.0;
        for (pos, &i) in idx.iter().enumerate() {
            let dropout = if mode == Mode::Eval { 0.0 } else { self.config.dropout_p };
            let c = forward_one(
                &self.layout,
                &self.params,
                &data.windows[i],
                &data.hc[i],
                mode.for_sample(pos as u64),
                dropout,
            );
            let (l, d) = loss_grad(&c.scores, data.labels[i], w);
            loss += l * w;
            backward_one(&self.layout, &self.params, &c, &d, grad);
        }
        loss
    }

    /// Train in place with mini-batch Adam; single-threaded and fully
    /// determined by `config.seed`.
    pub fn fit(&mut self, data: &NetDataset) -> Result<(), NetError> {
        check_dataset(self, data)?;
        let cfg = self.config;
        let n_params = self.params.len();
        let mut grad = vec![0.0; n_params];
        let mut m = vec![0.0; n_params];
        let mut v = vec![0.0; n_params];
        let mut step = 0i32;
        let mut log = TrainingLog { initial_loss: self.mean_loss(data), ..TrainingLog::default() };
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..cfg.epochs {
            let mut rng = seed::rng(seed::derive_seed(cfg.seed, &[0x5A0F, epoch as u64]));
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
                let key = seed::derive_seed(cfg.seed, &[0xD80F, epoch as u64, b as u64]);
                let loss = self.batch_gradient(data, batch, Mode::Train { key }, &mut grad);
                epoch_loss += loss * batch.len() as f64;
                step += 1;
                let c1 = 1.0 - cfg.beta1.powi(step);
                let c2 = 1.0 - cfg.beta2.powi(step);
                for j in 0..n_params {
                    m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
                    v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
                    self.params[j] -= cfg.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + cfg.adam_eps);
                }
            }
            log.epoch_loss.push(epoch_loss / data.len() as f64);
            log.eval_loss.push(self.mean_loss(data));
        }
        self.log = log;
        Ok(())
    }

    /// Analytic gradient of the eval-mode loss for one sample.
    pub fn gradient(&self, window: &[f64], hc: &[f64], label: usize) -> Result<Vec<f64>, NetError> {
        self.check_shapes(window, hc)?;
        let data = NetDataset { windows: vec![window.to_vec()], hc: vec![hc.to_vec()], labels: vec![label] };
        let mut grad = vec![0.0; self.params.len()];
        self.batch_gradient(&data, &[0], Mode::Eval, &mut grad);
        Ok(grad)
    }
}

/// Train a copy of `model` on `data`.
pub fn train(model: &NetModel, data: &NetDataset) -> Result<NetModel, NetError> {
    let mut m = model.clone();
    m.fit(data)?;
    Ok(m)
}

/// Largest `|analytic − numeric| / max(1, |analytic|, |numeric|)` over at
/// least 200 randomly chosen parameters (all of them if fewer), using
/// central differences with step 1e-5 and dropout disabled.
pub fn gradient_check(model: &NetModel, window: &[f64], hc: &[f64], label: usize) -> Result<f64, NetError> {
    const STEP: f64 = 1e-5;
    const PROBES: usize = 200;
    let analytic = model.gradient(window, hc, label)?;
    let n = model.params.len();
    let mut rng = seed::rng(seed::derive_seed(model.config.seed, &[0x6C4E]));
    let picks: Vec<usize> = if n <= PROBES { (0..n).collect() } else { (0..PROBES).map(|_| rng.random_range(0..n)).collect() };
    let loss_at = |params: &[f64]| {
        let c = forward_one(&model.layout, params, window, hc, Mode::Eval, 0.0);
        cross_entropy(&c.scores, label)
    };
    let mut params = model.params.clone();
    let mut worst: f64 = 0.0;
    for j in picks {
        let orig = params[j];
        params[j] = orig + STEP;
        let up = loss_at(&params);
        params[j] = orig - STEP;
        let down = loss_at(&params);
        params[j] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic[j];
        let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

//! Single-sample forward and backward passes over the flat parameter vector.

use super::{ArchitectureId, Layout};
use crate::seed;

/// Dropout is active only in `Train`; `key` addresses the mask stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { key: u64 },
}

impl Mode {
    pub(crate) fn for_sample(self, i: u64) -> Mode {
        match self {
            Mode::Eval => Mode::Eval,
            Mode::Train { key } => Mode::Train { key: seed::derive_seed(key, &[i]) },
        }
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    input: Vec<f64>,
    hc: Vec<f64>,
    conv_pre: Vec<f64>,
    mask: Vec<f64>,
    pooled_from: Vec<usize>,
    flat: Vec<f64>,
    h1_pre: Vec<f64>,
    h1: Vec<f64>,
    hc_pre: Vec<f64>,
    mid_in: Vec<f64>,
    mid_pre: Vec<f64>,
    mid: Vec<f64>,
    pub scores: Vec<f64>,
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Cross-entropy of `scores` against class `label`.
pub(crate) fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    lse - scores[label]
}

fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, bias)| bias + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// Accumulate weight/bias gradients of a dense layer and return dL/dx.
fn dense_back(w: &[f64], x: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut dx = vec![0.0; n_in];
    for (o, &d) in dy.iter().enumerate() {
        gb[o] += d;
        let row = &w[o * n_in..(o + 1) * n_in];
        let grow = &mut gw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            grow[i] += d * x[i];
            dx[i] += d * row[i];
        }
    }
    dx
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn relu_back(pre: &[f64], d: &mut [f64]) {
    for (g, p) in d.iter_mut().zip(pre) {
        if *p <= 0.0 {
            *g = 0.0;
        }
    }
}

pub(crate) fn forward_one(
    l: &Layout,
    p: &[f64],
    window: &[f64],
    hc: &[f64],
    mode: Mode,
    dropout_p: f64,
) -> Cache {
    let mut input = window.to_vec();
    if l.arch == ArchitectureId::Model2 {
        input.extend_from_slice(hc);
    }

    let (c_n, k_n, t_n) = (l.channels, l.kernel, l.conv_len);
    let cw = &p[l.conv_w..l.conv_w + c_n * k_n];
    let cb = &p[l.conv_b..l.conv_b + c_n];
    let mut conv_pre = vec![0.0; c_n * t_n];
    for c in 0..c_n {
        let kern = &cw[c * k_n..(c + 1) * k_n];
        for t in 0..t_n {
            conv_pre[c * t_n + t] = cb[c] + kern.iter().zip(&input[t..t + k_n]).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    let mask: Vec<f64> = match mode {
        Mode::Eval => vec![1.0; c_n * t_n],
        Mode::Train { key } => {
            let keep = 1.0 - dropout_p;
            (0..(c_n * t_n) as u64)
                .map(|i| if seed::unit_from_counter(key, i) < keep { 1.0 / keep } else { 0.0 })
                .collect()
        }
    };
    let dropped: Vec<f64> = conv_pre.iter().zip(&mask).map(|(v, m)| v.max(0.0) * m).collect();

    let mut pooled_from = Vec::with_capacity(l.flat);
    let mut flat = Vec::with_capacity(l.flat);
    for c in 0..c_n {
        for j in 0..l.pooled_len {
            let start = c * t_n + j * l.pool;
            let mut best = start;
            for idx in start + 1..start + l.pool {
                if dropped[idx] > dropped[best] {
                    best = idx;
                }
            }
            pooled_from.push(best);
            flat.push(dropped[best]);
        }
    }

    let h1_pre = dense(&p[l.fc1_w..l.fc1_w + l.h1 * l.flat], &p[l.fc1_b..l.fc1_b + l.h1], &flat);
    let h1 = relu(&h1_pre);

    let mut hc_pre = Vec::new();
    let mut mid_in = Vec::new();
    let mut mid_pre = Vec::new();
    let mut mid = Vec::new();
    let head_input: &[f64] = match l.arch {
        ArchitectureId::Baseline | ArchitectureId::Model2 => &h1,
        ArchitectureId::Model1 | ArchitectureId::Model3 => {
            mid_in = h1.clone();
            if l.arch == ArchitectureId::Model1 {
                mid_in.extend_from_slice(hc);
            } else {
                hc_pre = dense(
                    &p[l.hc_w..l.hc_w + l.hc_hidden * l.hc_dim],
                    &p[l.hc_b..l.hc_b + l.hc_hidden],
                    hc,
                );
                mid_in.extend(relu(&hc_pre));
            }
            mid_pre = dense(&p[l.mid_w..l.mid_w + l.mid * l.mid_in], &p[l.mid_b..l.mid_b + l.mid], &mid_in);
            mid = relu(&mid_pre);
            &mid
        }
    };
    let scores = dense(
        &p[l.out_w..l.out_w + l.classes * l.head_in()],
        &p[l.out_b..l.out_b + l.classes],
        head_input,
    );
    Cache {
        input,
        hc: hc.to_vec(),
        conv_pre,
        mask,
        pooled_from,
        flat,
        h1_pre,
        h1,
        hc_pre,
        mid_in,
        mid_pre,
        mid,
        scores,
    }
}

/// Accumulate dL/dθ for one sample into `grad`, given dL/dscores.
pub(crate) fn backward_one(l: &Layout, p: &[f64], cache: &Cache, dscores: &[f64], grad: &mut [f64]) {
    let head_in = l.head_in();
    let (out_w, rest) = grad[l.out_w..].split_at_mut(l.classes * head_in);
    let head_x = if l.mid > 0 { &cache.mid } else { &cache.h1 };
    let mut d_h1 = {
        let d_head = dense_back(&p[l.out_w..l.out_w + l.classes * head_in], head_x, dscores, out_w, &mut rest[..l.classes]);
        if l.mid > 0 {
            let mut d_mid = d_head;
            relu_back(&cache.mid_pre, &mut d_mid);
            let (gw, gb) = grad[l.mid_w..l.mid_b + l.mid].split_at_mut(l.mid * l.mid_in);
            let d_in = dense_back(&p[l.mid_w..l.mid_w + l.mid * l.mid_in], &cache.mid_in, &d_mid, gw, gb);
            if l.arch == ArchitectureId::Model3 {
                let mut d_hc = d_in[l.h1..].to_vec();
                relu_back(&cache.hc_pre, &mut d_hc);
                let (gw, gb) = grad[l.hc_w..l.hc_b + l.hc_hidden].split_at_mut(l.hc_hidden * l.hc_dim);
                dense_back(&p[l.hc_w..l.hc_w + l.hc_hidden * l.hc_dim], &cache.hc, &d_hc, gw, gb);
            }
            d_in[..l.h1].to_vec()
        } else {
            d_head
        }
    };
    relu_back(&cache.h1_pre, &mut d_h1);
    let (gw, gb) = grad[l.fc1_w..l.fc1_b + l.h1].split_at_mut(l.h1 * l.flat);
    let d_flat = dense_back(&p[l.fc1_w..l.fc1_w + l.h1 * l.flat], &cache.flat, &d_h1, gw, gb);

    let (c_n, k_n, t_n) = (l.channels, l.kernel, l.conv_len);
    let mut d_conv = vec![0.0; c_n * t_n];
    for (j, &src) in cache.pooled_from.iter().enumerate() {
        d_conv[src] += d_flat[j];
    }
    for ((d, &pre), &m) in d_conv.iter_mut().zip(&cache.conv_pre).zip(&cache.mask) {
        *d = if pre <= 0.0 { 0.0 } else { *d * m };
    }
    let (gw, gb) = grad[l.conv_w..l.conv_b + c_n].split_at_mut(c_n * k_n);
    for c in 0..c_n {
        for t in 0..t_n {
            let d = d_conv[c * t_n + t];
            if d == 0.0 {
                continue;
            }
            gb[c] += d;
            for k in 0..k_n {
                gw[c * k_n + k] += d * cache.input[t + k];
            }
        }
    }
}

/// Loss and dL/dscores of softmax cross-entropy, scaled by `weight`.
pub(crate) fn loss_grad(scores: &[f64], label: usize, weight: f64) -> (f64, Vec<f64>) {
    let mut d = softmax(scores);
    d[label] -= 1.0;
    d.iter_mut().for_each(|v| *v *= weight);
    (cross_entropy(scores, label), d)
}

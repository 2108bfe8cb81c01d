//! Single-frame MFCCs of a window.
//!
//! The whole window is one frame: mean removal, symmetric Hann taper, zero
//! padding to the next power of two, power spectrum, triangular mel bands
//! over (0, sr/2], log band energies floored at [`LOG_FLOOR`], orthonormal
//! DCT-II.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{require_len, FeatureError};

pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_mel_bands: usize,
    pub n_coefficients: usize,
    pub sample_rate_hz: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self { n_mel_bands: 10, n_coefficients: 5, sample_rate_hz: 1.0 }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.n_mel_bands == 0 || self.n_coefficients == 0 || self.n_coefficients > self.n_mel_bands {
            return Err(FeatureError::InvalidMfcc(format!(
                "{} coefficients from {} bands",
                self.n_coefficients, self.n_mel_bands
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(FeatureError::InvalidMfcc("sample rate must be positive".into()));
        }
        Ok(())
    }
}

pub(super) fn coefficient_names(cfg: &MfccConfig) -> Vec<String> {
    (0..cfg.n_coefficients).map(|i| format!("MFCC_{i}")).collect()
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Power spectrum `|X_k|^2`, `k = 0..=n_fft/2`, of an already tapered frame
/// zero-padded to `n_fft`.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = frame
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n_fft)
        .collect();
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Triangular mel filters, `n_bands` rows over the `n_fft/2 + 1` bins.
pub fn mel_filterbank(n_bands: usize, n_fft: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_bands + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    (0..n_bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate / n_fft as f64;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Center frequency of each mel band.
pub fn band_centers(n_bands: usize, sample_rate: f64) -> Vec<f64> {
    let top = hz_to_mel(sample_rate / 2.0);
    (1..=n_bands)
        .map(|i| mel_to_hz(top * i as f64 / (n_bands + 1) as f64))
        .collect()
}

pub(super) fn tapered_frame(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let hann = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            (v - mean) * hann
        })
        .collect()
}

/// Floored log energy per mel band.
pub fn mel_log_energies(x: &[f64], cfg: &MfccConfig) -> Result<Vec<f64>, FeatureError> {
    require_len(x, 8)?;
    cfg.validate()?;
    let n_fft = x.len().next_power_of_two();
    let power = power_spectrum(&tapered_frame(x), n_fft);
    Ok(mel_filterbank(cfg.n_mel_bands, n_fft, cfg.sample_rate_hz)
        .iter()
        .map(|filter| {
            let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
            e.max(LOG_FLOOR).ln()
        })
        .collect())
}

/// Orthonormal DCT-II, first `n_out` coefficients.
pub fn dct2_ortho(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                    .sum::<f64>()
        })
        .collect()
}

pub fn mfcc_features(x: &[f64], cfg: &MfccConfig) -> Result<Vec<f64>, FeatureError> {
    let energies = mel_log_energies(x, cfg)?;
    Ok(dct2_ortho(&energies, cfg.n_coefficients))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power spectrum by the O(n^2) DFT definition.
    fn naive_power(frame: &[f64], n_fft: usize) -> Vec<f64> {
        (0..=n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn constant_window_gives_flat_log_spectrum() {
        let cfg = MfccConfig::default();
        let c = mfcc_features(&[72.0; 50], &cfg).unwrap();
        assert_eq!(c.len(), 5);
        let expected_c0 = cfg.n_mel_bands as f64 * LOG_FLOOR.ln() * (1.0 / cfg.n_mel_bands as f64).sqrt();
        assert!((c[0] - expected_c0).abs() < 1e-9);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn fft_matches_direct_dft() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 31) as f64).collect();
        let frame = tapered_frame(&x);
        let fast = power_spectrum(&frame, 64);
        let slow = naive_power(&frame, 64);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn sinusoid_at_band_center_dominates_that_band() {
        let cfg = MfccConfig::default();
        let centers = band_centers(cfg.n_mel_bands, cfg.sample_rate_hz);
        for w in [64usize, 100] {
            let n_fft = w.next_power_of_two();
            let bank = mel_filterbank(cfg.n_mel_bands, n_fft, cfg.sample_rate_hz);
            for (band, &f) in centers.iter().enumerate() {
                let x: Vec<f64> = (0..w).map(|n| 70.0 + 10.0 * (2.0 * PI * f * n as f64).sin()).collect();
                // oracle: direct DFT through the same filterbank
                let power = naive_power(&tapered_frame(&x), n_fft);
                let oracle: Vec<f64> = bank
                    .iter()
                    .map(|flt| flt.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>().max(LOG_FLOOR).ln())
                    .collect();
                let got = mel_log_energies(&x, &cfg).unwrap();
                for (a, b) in got.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-9);
                }
                let argmax = got
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap();
                assert_eq!(argmax, band, "W={w} f={f}");
            }
        }
    }

    #[test]
    fn output_length_matches_config() {
        let cfg = MfccConfig { n_mel_bands: 12, n_coefficients: 7, sample_rate_hz: 1.0 };
        for w in 8..40 {
            let x: Vec<f64> = (0..w).map(|i| (i * i % 13) as f64).collect();
            assert_eq!(mfcc_features(&x, &cfg).unwrap().len(), 7);
        }
    }

    #[test]
    fn rejects_more_coefficients_than_bands() {
        let cfg = MfccConfig { n_mel_bands: 4, n_coefficients: 5, sample_rate_hz: 1.0 };
        assert!(matches!(mfcc_features(&[1.0; 16], &cfg), Err(FeatureError::InvalidMfcc(_))));
    }
}

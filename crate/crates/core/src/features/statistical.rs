use super::{negligible_spread, require_len, sorted, FeatureError};

pub const STATISTICAL_NAMES: [&str; 12] = [
    "Mean",
    "Std",
    "Variance",
    "Min",
    "Max",
    "Median",
    "IQR",
    "Skewness",
    "Kurtosis",
    "RMS",
    "MeanAbsDeviation",
    "HistogramEntropy",
];

const HISTOGRAM_BINS: usize = 10;

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)`).
pub(crate) fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn histogram_entropy(x: &[f64], min: f64, max: f64) -> f64 {
    let range = max - min;
    if negligible_spread(range, max) {
        return 0.0;
    }
    let mut counts = [0usize; HISTOGRAM_BINS];
    for v in x {
        let b = (((v - min) / range) * HISTOGRAM_BINS as f64) as usize;
        counts[b.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let n = x.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// The twelve statistical features, in [`STATISTICAL_NAMES`] order.
///
/// Skewness and kurtosis use biased central moments and are 0 when the
/// window has no spread.
pub fn statistical_features(x: &[f64]) -> Result<Vec<f64>, FeatureError> {
    require_len(x, 3)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut abs_dev) = (0.0, 0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        abs_dev += d.abs();
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skew, kurt) = if negligible_spread(m2.sqrt(), mean) {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    let s = sorted(x);
    let (min, max) = (s[0], s[s.len() - 1]);
    let median = quantile_sorted(&s, 0.5);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();

    Ok(vec![
        mean,
        variance.sqrt(),
        variance,
        min,
        max,
        median,
        iqr,
        skew,
        kurt,
        rms,
        abs_dev / n,
        histogram_entropy(x, min, max),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_window_against_arithmetic() {
        let v = statistical_features(&[60.0, 70.0, 80.0]).unwrap();
        assert_eq!(v[0], 70.0);
        assert_eq!(v[2], 100.0);
        assert_eq!(v[5], 70.0);
        // brute force: sqrt(mean of squares)
        let rms = ((3600.0f64 + 4900.0 + 6400.0) / 3.0).sqrt();
        assert!((v[9] - rms).abs() < 1e-9);
        assert!((v[9] - 70.474_581_706_219_92).abs() < 1e-9);
        assert_eq!(v[6], 10.0);
        assert!((v[10] - 20.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_window_degenerate_rules() {
        let v = statistical_features(&[88.0; 12]).unwrap();
        assert_eq!(v[7], 0.0);
        assert_eq!(v[8], 0.0);
        assert_eq!(v[11], 0.0);
    }

    #[test]
    fn symmetric_window_has_zero_skew() {
        let v = statistical_features(&[1.0, 3.0, 2.0, 3.0, 1.0]).unwrap();
        assert!(v[7].abs() < 1e-12);
    }

    #[test]
    fn entropy_of_two_equal_bins() {
        let v = statistical_features(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((v[11] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_two_point_distribution() {
        // symmetric two-point: m4/m2^2 = 1
        let v = statistical_features(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!((v[8] + 2.0).abs() < 1e-12);
    }
}

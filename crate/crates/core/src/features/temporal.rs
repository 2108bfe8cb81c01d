use super::{negligible_spread, require_len, FeatureError};

pub const TEMPORAL_NAMES: [&str; 10] = [
    "Autocorrelation",
    "ZeroCrossings",
    "MeanAbsDiff",
    "MeanDiff",
    "SumAbsDiff",
    "Slope",
    "PeakToPeak",
    "LocalMaxima",
    "Centroid",
    "AUC",
];

/// Pearson correlation of `x[..n-1]` with `x[1..]`; 0 when either slice is flat.
pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let a = &x[..x.len() - 1];
    let b = &x[1..];
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        sab += (p - ma) * (q - mb);
        saa += (p - ma) * (p - ma);
        sbb += (q - mb) * (q - mb);
    }
    if negligible_spread((saa / n).sqrt(), ma) || negligible_spread((sbb / n).sqrt(), mb) {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// The ten temporal features, in [`TEMPORAL_NAMES`] order.
pub fn temporal_features(x: &[f64]) -> Result<Vec<f64>, FeatureError> {
    require_len(x, 3)?;
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;

    let zero_crossings = x
        .windows(2)
        .filter(|w| ((w[0] - mean) < 0.0) != ((w[1] - mean) < 0.0))
        .count() as f64;

    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let sum_abs: f64 = diffs.iter().map(|d| d.abs()).sum();
    let mean_diff = diffs.iter().sum::<f64>() / (n - 1) as f64;

    let t_mean = (nf - 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (v - mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;

    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let local_maxima = x.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count() as f64;

    let mass: f64 = x.iter().map(|v| v.abs()).sum();
    let centroid = if mass > 0.0 {
        x.iter().enumerate().map(|(i, v)| i as f64 * v.abs()).sum::<f64>() / mass
    } else {
        0.0
    };
    let auc: f64 = x.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();

    Ok(vec![
        lag1_autocorrelation(x),
        zero_crossings,
        sum_abs / (n - 1) as f64,
        mean_diff,
        sum_abs,
        slope,
        max - min,
        local_maxima,
        centroid,
        auc,
    ])
}

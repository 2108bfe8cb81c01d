use super::{require_len, FeatureError};
use crate::preprocess::mean_std;

pub const BASE_NAMES: [&str; 6] = ["Max", "Min", "Mean", "Std", "MeanDiff1", "MeanDiff2"];

/// `[max, min, mean, sample std, mean first difference, mean second difference]`.
pub fn base_features(x: &[f64]) -> Result<Vec<f64>, FeatureError> {
    require_len(x, 3)?;
    let n = x.len();
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let (mean, std) = mean_std(x);
    let d1: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d1_mean = d1.iter().sum::<f64>() / (n - 1) as f64;
    let d2_mean = d1.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (n - 2) as f64;
    Ok(vec![max, min, mean, std, d1_mean, d2_mean])
}

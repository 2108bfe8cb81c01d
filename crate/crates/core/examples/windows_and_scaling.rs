//! Sliding windows with majority labels and the two standardization schemes.
//!
//! `cargo run --example windows_and_scaling`

use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{fit_scaler, mean_std, segment, standardize_series, WindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = generate_synthetic(&SyntheticCohortSpec::new(1, 1, 7))?.series.remove(0);
    for (w, s) in [(50, 10), (80, 40), (120, 120)] {
        let windows = segment(&series, WindowConfig::new(w, s)?);
        let labels: Vec<&str> = windows.iter().map(|x| x.label.name()).collect();
        println!("W={w:<3} S={s:<3} -> {:>3} windows, first labels {:?}", windows.len(), &labels[..labels.len().min(6)]);
    }

    let z = standardize_series(&series)?;
    let (m, sd) = mean_std(&z.bpm());
    println!("per-subject standardization: mean {m:.2e}, std {sd:.6}");

    let windows = segment(&series, WindowConfig::new(80, 20)?);
    let rows: Vec<Vec<f64>> = windows.iter().map(|w| w.values.clone()).collect();
    let (train, test) = rows.split_at(rows.len() * 2 / 3);
    let scaler = fit_scaler(train)?;
    let scaled = scaler.apply_all(test)?;
    println!("scaler fit on {} training windows applied to {} test windows; first value {:.3}", train.len(), scaled.len(), scaled[0][0]);
    Ok(())
}

//! Train the four 1-D convolutional architectures on a small cohort.
//!
//! `cargo run --release --example conv_nets`

use hrgroup::features::{extract, FeatureInput, FeatureSetKind, MfccConfig};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::neuralnet::{train, ArchitectureId, NetConfig, NetDataset, NetModel};
use hrgroup::preprocess::{fit_scaler, segment_all, standardize_window, subject_stats, WindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(8, 2, 4))?.series;
    let stats = subject_stats(&corpus)?;
    let windows = segment_all(&corpus, WindowConfig::new(50, 25)?);
    let raw: Vec<Vec<f64>> = windows
        .iter()
        .map(|w| standardize_window(w, &stats).map(|z| z.values))
        .collect::<Result<_, _>>()?;
    let hc: Vec<Vec<f64>> = extract(&windows, FeatureSetKind::StatTemporal, &MfccConfig::default(), FeatureInput::Raw)?
        .into_iter()
        .map(|f| f.values)
        .collect();
    let hc = fit_scaler(&hc)?.apply_all(&hc)?;
    let labels: Vec<usize> = windows.iter().map(|w| w.label.index()).collect();

    for arch in ArchitectureId::ALL {
        let f = if arch == ArchitectureId::Baseline { 0 } else { 22 };
        let data = NetDataset {
            windows: raw.clone(),
            hc: if f == 0 { vec![Vec::new(); raw.len()] } else { hc.clone() },
            labels: labels.clone(),
        };
        let config = NetConfig { epochs: 10, ..NetConfig::new(50, f, 1) };
        let untrained = NetModel::build(arch, &config)?;
        let model = train(&untrained, &data)?;
        let correct = (0..data.len())
            .filter(|&i| model.predict(&data.windows[i], &data.hc[i]).unwrap() == data.labels[i])
            .count();
        println!(
            "{:<8} {:>6} params, loss {:.3} -> {:.3}, training accuracy {:.3}",
            arch.name(),
            model.param_count(),
            model.log.initial_loss,
            model.log.eval_loss.last().copied().unwrap_or(f64::NAN),
            correct as f64 / data.len() as f64
        );
    }
    Ok(())
}

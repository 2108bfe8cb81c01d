//! Hand-crafted feature sets on one window, and a batch extraction.
//!
//! `cargo run --example handcrafted_features`

use hrgroup::features::{compute, extract, FeatureInput, FeatureSetKind, MfccConfig};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{segment_all, subject_stats, WindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(4, 2, 3))?.series;
    let windows = segment_all(&corpus, WindowConfig::new(80, 40)?);
    let mfcc = MfccConfig::default();
    let w = &windows[10];
    println!("window of {} starting at {} ({})", w.subject_id, w.start_index, w.label.name());
    for kind in [FeatureSetKind::Base, FeatureSetKind::BaseMfcc, FeatureSetKind::Statistical, FeatureSetKind::Temporal] {
        let values = compute(&w.values, kind, &mfcc)?;
        println!("\n{kind:?} ({} values)", values.len());
        for (name, v) in kind.names(&mfcc).iter().zip(&values) {
            println!("  {name:<28} {v:>12.4}");
        }
    }

    let stats = subject_stats(&corpus)?;
    let batch = extract(&windows, FeatureSetKind::StatTemporal, &mfcc, FeatureInput::Standardized(&stats))?;
    println!("\nStatTemporal on standardized input: {} vectors of {} values", batch.len(), batch[0].values.len());
    Ok(())
}

//! Window/stride grid under a random window split and a subject-grouped
//! split, with per-cell reports written to disk.
//!
//! `cargo run --release --example stride_sweep`

use hrgroup::evaluation::{run_sweep, write_sweep_summary, InputSpec, ModelSpec, SplitPlan};
use hrgroup::features::FeatureSetKind;
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::StandardizationMode;
use hrgroup::svm::SvmParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(12, 2, 1))?.series;
    let input = InputSpec::features(FeatureSetKind::StatTemporal, StandardizationMode::FeatureStd);
    let model = ModelSpec::Svm(SvmParams::default());
    let dir = tempfile::tempdir()?;
    for (name, plan) in [("random window", SplitPlan::random_window(1)), ("grouped subjects", SplitPlan::grouped(1, 4))] {
        let cells = run_sweep(&corpus, &[50, 80], &[10, 40, 120], &plan, &input, &model)?;
        println!("{name}:");
        for c in &cells {
            println!(
                "  W={:<3} S={:<3} accuracy {:.3} balanced {:.3} ({} folds)",
                c.window,
                c.stride,
                c.report.accuracy,
                c.report.balanced_accuracy,
                c.report.folds.len()
            );
        }
        let path = dir.path().join(format!("{}.csv", name.replace(' ', "_")));
        write_sweep_summary(&cells, &path)?;
    }
    Ok(())
}

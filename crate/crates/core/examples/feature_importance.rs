//! Permutation importance of hand-crafted features for a held-out fold.
//!
//! `cargo run --release --example feature_importance`

use hrgroup::evaluation::{fit_pipeline, make_folds, permutation_importance, prepare, InputSpec, ModelSpec, SplitPlan};
use hrgroup::features::FeatureSetKind;
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{StandardizationMode, WindowConfig};
use hrgroup::svm::SvmParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(12, 2, 8))?.series;
    let input = InputSpec::features(FeatureSetKind::StatTemporal, StandardizationMode::FeatureStd);
    let data = prepare(&corpus, WindowConfig::new(80, 20)?, &input)?;
    let fold = make_folds(&data, &SplitPlan::grouped(8, 4), None)?.remove(0);
    let model = fit_pipeline(&data, &fold.train, &input, &ModelSpec::Svm(SvmParams::default()), 8)?;
    let report = permutation_importance(&model, &data, &fold.test, 5, 8)?;
    println!("held out {}: balanced accuracy {:.3}", fold.held_out, report.baseline_balanced_accuracy);
    for e in report.top(10) {
        println!("  {:>2}. {:<28} {:+.4}", e.rank, e.name, e.importance);
    }
    Ok(())
}

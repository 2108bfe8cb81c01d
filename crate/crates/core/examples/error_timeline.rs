//! Per-second prediction timeline for a held-out subject, and how errors
//! concentrate after activity changes.
//!
//! `cargo run --release --example error_timeline`

use hrgroup::evaluation::{
    fit_pipeline, make_folds, misclassification_timeline, prepare, transition_error_rates, write_timeline_csv,
    InputSpec, ModelSpec, SplitPlan,
};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{StandardizationMode, WindowConfig};
use hrgroup::svm::SvmParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(10, 2, 6))?.series;
    let cfg = WindowConfig::new(50, 10)?;
    let input = InputSpec::raw(StandardizationMode::DataStd);
    let data = prepare(&corpus, cfg, &input)?;
    let fold = make_folds(&data, &SplitPlan::leave_subject_out(6), None)?.remove(0);
    let model = fit_pipeline(&data, &fold.train, &input, &ModelSpec::Svm(SvmParams::default()), 6)?;
    let series = corpus.iter().find(|s| s.subject_id == fold.held_out).expect("held-out subject");
    let rows = misclassification_timeline(&model, series, cfg)?;

    let mut last = None;
    for r in rows.iter().filter(|r| !r.correct) {
        if last.is_none_or(|t| r.t - t > 1.0) {
            println!("error run from t={:>4} s: true {}, predicted {}", r.t, r.truth.name(), r.pred.name());
        }
        last = Some(r.t);
    }
    let (near, steady) = transition_error_rates(&rows, 60.0);
    println!("error rate within 60 s after a change {near:.3}, elsewhere {steady:.3}");

    let dir = tempfile::tempdir()?;
    write_timeline_csv(&rows, &dir.path().join("timeline.csv"))?;
    Ok(())
}

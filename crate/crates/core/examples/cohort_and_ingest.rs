//! Generate a synthetic cohort, write it as CSV, read it back and resample.
//!
//! `cargo run --example cohort_and_ingest`

use hrgroup::ingest::{
    generate_synthetic, parse_corpus, resample_uniform, write_corpus_dir, CsvSchema, SyntheticCohortSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = generate_synthetic(&SyntheticCohortSpec::new(6, 2, 42))?;
    for s in &cohort.series {
        println!(
            "{}: group {}, baseline {:.1} bpm, {} samples",
            s.subject_id,
            cohort.groups[&s.subject_id],
            cohort.baselines[&s.subject_id],
            s.len()
        );
    }

    let dir = tempfile::tempdir()?;
    let files = write_corpus_dir(&cohort.series, dir.path())?;
    println!("wrote {} files to {}", files.len(), dir.path().display());

    let parsed = parse_corpus(dir.path(), &CsvSchema::default())?;
    assert_eq!(parsed, cohort.series);
    let resampled = resample_uniform(&parsed[0], 2.0)?;
    println!(
        "{} resampled at 2 s: {} samples, {} gaps",
        parsed[0].subject_id,
        resampled.series.len(),
        resampled.gaps.len()
    );
    Ok(())
}

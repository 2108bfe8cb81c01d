//! One-vs-one RBF SVM on statistical features, with save and reload.
//!
//! `cargo run --release --example svm_classifier`

use hrgroup::features::{extract, FeatureInput, FeatureSetKind, MfccConfig};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{fit_scaler, segment_all, WindowConfig};
use hrgroup::svm::{OvoSvm, SvmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(10, 2, 9))?.series;
    let (train_s, test_s) = corpus.split_at(8);
    let cfg = WindowConfig::new(80, 20)?;
    let feats = |s| -> Result<_, Box<dyn std::error::Error>> {
        let w = segment_all(s, cfg);
        let f = extract(&w, FeatureSetKind::Statistical, &MfccConfig::default(), FeatureInput::Raw)?;
        Ok((f.into_iter().map(|v| v.values).collect::<Vec<_>>(), w.into_iter().map(|w| w.label).collect::<Vec<_>>()))
    };
    let (xtr, ytr) = feats(train_s)?;
    let (xte, yte) = feats(test_s)?;
    let scaler = fit_scaler(&xtr)?;
    let (xtr, xte) = (scaler.apply_all(&xtr)?, scaler.apply_all(&xte)?);

    let model = OvoSvm::train(&xtr, &ytr, &SvmParams::default())?;
    println!("{} pairwise machines over classes {:?}", model.machines.len(), model.classes);
    let pred = model.predict_all(&xte)?;
    let correct = pred.iter().zip(&yte).filter(|(a, b)| a == b).count();
    println!("held-out subjects: {correct}/{} windows correct", yte.len());

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("svm.json");
    model.save(&path)?;
    assert_eq!(OvoSvm::load(&path)?.predict_all(&xte)?, pred);
    println!("saved and reloaded from {}", path.display());
    Ok(())
}

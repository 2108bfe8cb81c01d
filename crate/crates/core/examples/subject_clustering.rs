//! Cluster subjects by their mean-BPM-per-activity profile and by
//! window-feature summaries, then compare with the latent groups.
//!
//! `cargo run --example subject_clustering`

use hrgroup::clustering::{
    adjusted_rand_index, fit_profile_clusters, fit_window_space, ClusterReport, ClusterSpace, KMeansConfig,
};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::{segment_all, WindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = generate_synthetic(&SyntheticCohortSpec::new(24, 3, 5))?;
    let windows = segment_all(&cohort.series, WindowConfig::new(80, 20)?);
    let truth: Vec<usize> = cohort.groups.values().copied().collect();

    let (model, assignment) = fit_profile_clusters(&windows, &KMeansConfig::new(3, 5))?;
    let found: Vec<usize> = assignment.values().copied().collect();
    println!("profile clustering: inertia {:.1}, ARI vs latent groups {:.3}", model.inertia, adjusted_rand_index(&found, &truth));
    for c in ClusterReport::new(&model, &assignment).clusters {
        println!("  cluster {}: {:?}", c.cluster, c.members);
    }

    let (model, assignment) = fit_window_space(&windows, ClusterSpace::StatisticalWindow, &KMeansConfig::new(3, 5))?;
    let found: Vec<usize> = assignment.values().copied().collect();
    println!("statistical-window clustering: ARI {:.3}", adjusted_rand_index(&found, &truth));
    let subject = &cohort.series[0];
    let vectors: Vec<Vec<f64>> = windows
        .iter()
        .filter(|w| w.subject_id == subject.subject_id)
        .map(|w| model.window_vector(w))
        .collect::<Result<_, _>>()?;
    println!("{} routes to cluster {}", subject.subject_id, model.route_subject(&vectors)?);
    Ok(())
}

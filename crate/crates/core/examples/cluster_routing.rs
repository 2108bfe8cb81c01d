//! Subject-grouped classification: cross-cluster transfer, within-cluster
//! leave-one-subject-out, and routed evaluation per window vs per subject.
//!
//! `cargo run --release --example cluster_routing`

use hrgroup::clustering::{fit_profile_clusters, ClusterSpace, KMeansConfig};
use hrgroup::evaluation::{
    cross_cluster_eval, prepare, routed_eval, within_cluster_loso, InputSpec, ModelSpec, Routing, SplitPlan,
};
use hrgroup::ingest::{generate_synthetic, SyntheticCohortSpec};
use hrgroup::preprocess::WindowConfig;
use hrgroup::svm::SvmParams;
use hrgroup::ActivityLabel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(&SyntheticCohortSpec::new(18, 3, 2))?.series;
    let input = InputSpec::default();
    let model = ModelSpec::Svm(SvmParams::default());
    let data = prepare(&corpus, WindowConfig::new(80, 20)?, &input)?;

    let (_, assignment) = fit_profile_clusters(&data.windows, &KMeansConfig::new(3, 2))?;
    println!("cross-cluster balanced accuracy (rows train, columns test):");
    for a in 0..3 {
        let row: Vec<String> = (0..3)
            .map(|b| cross_cluster_eval(&data, &assignment, a, b, &input, &model, 2).map(|r| format!("{:.2}", r.balanced_accuracy)))
            .collect::<Result<_, _>>()?;
        println!("  {a}: {}", row.join("  "));
    }

    let within = within_cluster_loso(&data, &assignment, &input, &model, &SplitPlan::leave_subject_out(2))?;
    println!("no-clustering baseline {:.3}", within.baseline_mean_balanced_accuracy);
    for c in &within.clusters {
        println!("  cluster {} ({} subjects): {:.3}", c.cluster, c.members.len(), c.mean_balanced_accuracy);
    }

    for routing in [Routing::PerWindow, Routing::PerSubject] {
        let r = routed_eval(&data, 3, routing, ClusterSpace::StatisticalWindow, &input, &model, &SplitPlan::grouped(2, 6), 20)?;
        println!(
            "{routing:?}: balanced {:.3}, Rest<->Activity confusions {}",
            r.balanced_accuracy,
            r.confusion_matrix.confusions_between(ActivityLabel::Rest, ActivityLabel::Activity)
        );
    }
    Ok(())
}

//! Full pipeline on a synthetic cohort; prints the summary and compares the
//! subject labels with the generator's truth.
//!
//!     cargo run --release --example full_pipeline -- [seed]

use std::collections::BTreeMap;

use somcluster::dataset::SyntheticSpec;
use somcluster::pipeline::{run_pipeline, InputSource, PipelineConfig};

fn main() -> somcluster::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let mut cfg = PipelineConfig {
        input: InputSource::Synthetic(SyntheticSpec { seed, ..Default::default() }),
        master_seed: seed,
        ..Default::default()
    };
    cfg.ensemble.n_p = 100;
    cfg.consensus.k_max = 8;

    let out = run_pipeline(&cfg)?;
    let r = &out.report;
    println!(
        "kept {}/{} SOMs, selected k = {}, consensus ICS = {}",
        r.ensemble.n_retained, r.ensemble.n_runs, r.consensus.selected_k, r.consensus.selected.ics
    );
    println!("consensus: {:?}", r.consensus.selected);
    println!("k-means:   {:?}", r.baselines.kmeans);
    println!("one SOM:   {:?}", r.baselines.single_som);

    // contingency of (true cluster, found cluster) over subjects
    let truth = out.prepared.true_labels.as_ref().expect("synthetic input");
    let mut table = BTreeMap::new();
    for (t, s) in truth.iter().zip(&r.consensus.subject_labels) {
        *table.entry((*t, s.cluster)).or_insert(0) += 1;
    }
    println!("(true, found) -> subjects: {table:?}");
    for (stage, d) in &r.timings.stages {
        println!("{stage}: {d:?}");
    }
    Ok(())
}

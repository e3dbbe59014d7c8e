//! Run a small SOM ensemble and report how many members pass the ICS filter.

use somcluster::dataset::{generate_synthetic, SyntheticSpec};
use somcluster::ensemble::run_ensemble;
use somcluster::lle::{lle, LleConfig};
use somcluster::som::SomConfig;

fn main() -> somcluster::Result<()> {
    let cohort = generate_synthetic(&SyntheticSpec { seed: 2, ..Default::default() })?;
    let x = cohort.samples.standardized();
    let e = lle(&x, &LleConfig::default())?;

    for threshold in [0.099, 0.02] {
        let set = run_ensemble(&e.values, x.subject_ids(), 50, threshold, &SomConfig::default(), 7)?;
        let mean = set.ics_values.iter().sum::<f64>() / set.len() as f64;
        println!(
            "threshold {threshold}: kept {}/{} partitions, mean ICS {mean:.4}",
            set.len(),
            set.n_runs
        );
    }
    Ok(())
}

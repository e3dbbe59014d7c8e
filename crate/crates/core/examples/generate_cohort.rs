//! Generate a synthetic cohort and print its shape and true cluster sizes.
//!
//!     cargo run --example generate_cohort -- [seed] [out.csv]

use somcluster::dataset::{generate_synthetic, SyntheticSpec};

fn main() -> somcluster::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let spec = SyntheticSpec { seed, ..Default::default() };
    let cohort = generate_synthetic(&spec)?;

    let mut sizes = vec![0; spec.n_true_clusters];
    for &l in &cohort.true_labels {
        sizes[l] += 1;
    }
    println!(
        "{} samples x {} features, {} subjects, subjects per cluster {:?}",
        cohort.samples.rows(),
        cohort.samples.cols(),
        cohort.samples.subjects().len(),
        sizes
    );
    if let Some(path) = args.next() {
        cohort.samples.save_csv(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}

//! Co-association of a few noisy partitions, then spectral selection of k.

use nalgebra::DMatrix;
use somcluster::consensus::{co_association_of, select_partition};
use somcluster::ensemble::Partition;

fn main() -> somcluster::Result<()> {
    // three groups of four samples, one subject per pair of samples
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
    let mut partitions = vec![Partition::new(truth.to_vec()); 8];
    partitions.push(Partition::new(vec![0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2]));
    partitions.push(Partition::new(vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1]));
    let w = co_association_of(&partitions)?;
    println!("C(0,3) = {}, C(3,4) = {}, C(0,11) = {}", w.get(0, 3), w.get(3, 4), w.get(0, 11));

    let x = DMatrix::from_fn(12, 2, |i, j| truth[i] as f64 * 5.0 + (i * (j + 1) % 3) as f64 * 0.1);
    let subjects: Vec<String> = (0..12).map(|i| format!("s{}", i / 2)).collect();
    let result = select_partition(&w, &x, &subjects, 2, 5, 1)?;
    for c in &result.per_k_reports {
        println!("k = {}: sc {:.3}", c.k, c.report.sc);
    }
    println!("selected k = {}", result.selected_k);
    println!("labels: {:?}", result.sample_partition.labels());
    Ok(())
}

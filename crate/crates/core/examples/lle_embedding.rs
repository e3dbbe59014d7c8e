//! Locally linear embedding, step by step and in one call.

use nalgebra::DMatrix;
use somcluster::dataset::{generate_synthetic, SyntheticSpec};
use somcluster::lle::{embed, knn_graph, lle, reconstruction_weights, LleConfig};

fn main() -> somcluster::Result<()> {
    // a helix: 1-D manifold in 3-D
    let n = 40;
    let helix = DMatrix::from_fn(n, 3, |i, j| {
        let t = i as f64 * 0.15;
        [t.cos(), t.sin(), 0.3 * t][j]
    });
    let graph = knn_graph(&helix, 6)?;
    let w = reconstruction_weights(&helix, &graph, 1e-3)?;
    let worst = (0..n)
        .map(|i| (w.weights[i].iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    println!("max |row sum - 1| = {worst:.1e}");
    let y = embed(&w, 1)?;
    let monotone = (1..n).all(|i| y[i] > y[i - 1]) || (1..n).all(|i| y[i] < y[i - 1]);
    println!("1-D coordinate monotone along the helix: {monotone}");

    let cohort = generate_synthetic(&SyntheticSpec::default())?;
    let e = lle(&cohort.samples.standardized(), &LleConfig::default())?;
    println!("cohort embedding: {} x {}", e.rows(), e.dim());
    println!("smallest retained eigenvalues: {:.3e}", e.eigenvalues[0]);
    Ok(())
}

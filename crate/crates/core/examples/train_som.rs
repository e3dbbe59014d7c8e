//! Train one SOM on two well separated blobs and show where the data lands.

use nalgebra::DMatrix;
use somcluster::som::{partition_from_som, train_som, SomConfig};

fn main() -> somcluster::Result<()> {
    let data = DMatrix::from_fn(40, 2, |i, j| {
        let base = if i < 20 { 0.0 } else { 100.0 };
        base + ((i * 7 + j * 3) % 5) as f64 * 0.2
    });
    let cfg = SomConfig {
        grid_rows: 1,
        grid_cols: 2,
        seed: 11,
        ..Default::default()
    };
    let model = train_som(&data, &cfg)?;
    println!("trained {} iterations", model.iterations_run);
    for j in 0..model.n_nodes() {
        println!("node {j}: {:.2?}", model.node(j));
    }
    let p = partition_from_som(&model, &data)?;
    println!("labels: {:?}", p.labels());
    Ok(())
}

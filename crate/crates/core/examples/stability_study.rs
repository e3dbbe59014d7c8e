//! Rerun the consensus and a single SOM with different seeds and compare the
//! spread of their validity scores.
//!
//!     cargo run --release --example stability_study -- [reruns]

use somcluster::pipeline::{prepare, stability_study, PipelineConfig};

fn main() -> somcluster::Result<()> {
    let reruns = std::env::args().nth(1).map_or(5, |s| s.parse().expect("reruns must be an integer"));
    let mut cfg = PipelineConfig {
        n_stability_reruns: reruns,
        ..Default::default()
    };
    cfg.ensemble.n_p = 100;
    cfg.consensus.k_max = 8;

    let data = prepare(&cfg)?;
    let (block, runs) = stability_study(&cfg, &data)?;
    for (c, s) in runs.consensus.iter().zip(&runs.single_som) {
        println!("consensus sc {:.4} db {:.4} | single SOM sc {:.4} db {:.4}", c.sc, c.db, s.sc, s.db);
    }
    for m in &block.methods {
        println!("{:>10}: std_sc {:.4} std_ch {:.2} std_db {:.4}", m.method, m.std_sc, m.std_ch, m.std_db);
    }
    Ok(())
}

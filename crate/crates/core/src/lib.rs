//! Ensemble self-organizing-map clustering with a co-association consensus.
//!
//! The pipeline:
//!
//! 1. [`dataset`]: load a feature CSV (or generate a synthetic cohort of
//!    subjects with replicate samples) and optionally z-score features.
//! 2. [`lle`]: reduce dimension with locally linear embedding.
//! 3. [`som`] / [`ensemble`]: train many independently seeded SOMs and keep
//!    the partitions whose intra-subject consistency score (ICS) is below a
//!    threshold.
//! 4. [`consensus`]: count how often each pair of samples co-clusters,
//!    spectral-cluster that graph for a range of cluster counts, keep the
//!    count with the best silhouette, and map sample labels to subjects by
//!    majority.
//! 5. [`metrics`]: silhouette, Calinski-Harabasz, Davies-Bouldin and ICS.
//!
//! [`pipeline`] wires the steps together and produces a [`report::RunReport`].

pub mod consensus;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod lle;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod seeds;
pub mod som;

pub use consensus::{
    co_association, kmeans, map_to_subjects, select_partition, spectral_partition, CoAssociationMatrix,
    ConsensusResult,
};
pub use dataset::{generate_synthetic, load_csv, SampleMatrix, SyntheticSpec};
pub use ensemble::{run_ensemble, Partition, PartitionSet};
pub use error::{Error, Result};
pub use lle::{embed, knn_graph, reconstruction_weights, Embedding, LleConfig, NeighborGraph};
pub use metrics::{calinski_harabasz, davies_bouldin, ics, silhouette, ValidityReport};
pub use pipeline::{run_pipeline, stability_study, PipelineConfig};
pub use report::RunReport;
pub use som::{best_matching_unit, partition_from_som, train_som, SomConfig, SomModel};

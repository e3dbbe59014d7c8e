//! Ensemble of independently seeded SOMs filtered by intra-subject
//! consistency.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::seeds::derive_seed;
use crate::som::{partition_from_som, train_som, SomConfig};

/// Cluster label per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Partition { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        metrics::n_clusters(&self.labels)
    }

    /// Relabels by first occurrence, so labels become `0..K` and partitions
    /// equal up to renaming compare equal.
    pub fn canonical(&self) -> Partition {
        let mut map = HashMap::new();
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn is_canonical(&self) -> bool {
        let mut next = 0;
        for &l in &self.labels {
            if l == next {
                next += 1;
            } else if l > next {
                return false;
            }
        }
        true
    }
}

/// The retained ensemble members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub partitions: Vec<Partition>,
    pub ics_values: Vec<f64>,
    /// Index of the ensemble run each partition came from.
    pub run_indices: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Number of runs before filtering.
    pub n_runs: usize,
    pub threshold: f64,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.partitions.first().map_or(0, Partition::n_samples)
    }

    /// Wide CSV: `sample_id,run_<i>,...` with one column per retained run.
    pub fn write_csv<W: Write>(&self, sample_ids: &[String], out: W) -> Result<()> {
        let n = self.n_samples();
        if sample_ids.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: sample_ids.len(),
            });
        }
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.run_indices.iter().map(|r| format!("run_{r}")));
        wtr.write_record(&header)?;
        for (i, id) in sample_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.partitions.iter().map(|p| p.labels()[i].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A scored ensemble member before filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub run_index: usize,
    pub seed: u64,
    pub partition: Partition,
}

/// Keeps candidates whose ICS is strictly below `threshold`, in input order.
/// Partitions are canonicalized.
pub fn filter_partitions(
    candidates: Vec<Candidate>,
    subjects: &[String],
    threshold: f64,
) -> Result<PartitionSet> {
    let n_runs = candidates.len();
    let mut set = PartitionSet {
        partitions: Vec::new(),
        ics_values: Vec::new(),
        run_indices: Vec::new(),
        seeds: Vec::new(),
        n_runs,
        threshold,
    };
    for c in candidates {
        let score = metrics::ics(c.partition.labels(), subjects)?;
        if score < threshold {
            set.partitions.push(c.partition.canonical());
            set.ics_values.push(score);
            set.run_indices.push(c.run_index);
            set.seeds.push(c.seed);
        }
    }
    if set.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_p: usize,
    pub ics_threshold: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_p: 1000,
            ics_threshold: 0.099,
        }
    }
}

/// Trains one SOM per run index `0..n_p` with seed `derive_seed(master_seed, i)`
/// and keeps the partitions whose ICS is below `ics_threshold`.
///
/// Runs execute on the current rayon pool; results are collected by run
/// index, so the output does not depend on the number of threads.
pub fn run_ensemble(
    data: &DMatrix<f64>,
    subjects: &[String],
    n_p: usize,
    ics_threshold: f64,
    base_cfg: &SomConfig,
    master_seed: u64,
) -> Result<PartitionSet> {
    if n_p == 0 {
        return Err(Error::InvalidArgument("n_p must be >= 1".into()));
    }
    if !(ics_threshold > 0.0 && ics_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ics_threshold must be in (0, 1], got {ics_threshold}"
        )));
    }
    if subjects.len() != data.nrows() {
        return Err(Error::LengthMismatch {
            left: subjects.len(),
            right: data.nrows(),
        });
    }
    let candidates = run_members(data, base_cfg, master_seed, 0..n_p)?;
    filter_partitions(candidates, subjects, ics_threshold)
}

/// Trains the ensemble members for the given run indices.
pub fn run_members(
    data: &DMatrix<f64>,
    base_cfg: &SomConfig,
    master_seed: u64,
    runs: impl IntoIterator<Item = usize>,
) -> Result<Vec<Candidate>> {
    let runs: Vec<usize> = runs.into_iter().collect();
    runs.par_iter()
        .map(|&run_index| {
            let seed = derive_seed(master_seed, run_index as u64);
            let cfg = SomConfig { seed, ..*base_cfg };
            let model = train_som(data, &cfg)?;
            Ok(Candidate {
                run_index,
                seed,
                partition: partition_from_som(&model, data)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subjects(n_subj: usize, per: usize) -> Vec<String> {
        (0..n_subj * per).map(|i| format!("p{}", i / per)).collect()
    }

    #[test]
    fn canonical_first_occurrence() {
        let p = Partition::new(vec![7, 7, 2, 9, 2]);
        assert_eq!(p.canonical().labels(), &[0, 0, 1, 2, 1]);
        assert!(p.canonical().is_canonical());
        assert!(!p.is_canonical());
        assert_eq!(Partition::new(vec![3, 1, 1]).canonical(), Partition::new(vec![5, 0, 0]).canonical());
    }

    #[test]
    fn filter_excludes_inconsistent_member() {
        let subj = subjects(4, 3);
        let good = Partition::new(vec![0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1]);
        let shuffled = Partition::new(vec![0, 1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0]);
        let cands = vec![
            Candidate { run_index: 0, seed: 1, partition: good.clone() },
            Candidate { run_index: 1, seed: 2, partition: shuffled },
            Candidate { run_index: 2, seed: 3, partition: good },
        ];
        let set = filter_partitions(cands, &subj, 0.099).unwrap();
        assert_eq!(set.run_indices, vec![0, 2]);
        assert_eq!(set.n_runs, 3);
        assert!(set.ics_values.iter().all(|v| *v < 0.099));
    }

    #[test]
    fn empty_after_filter() {
        let subj = subjects(1, 3);
        let cands = vec![Candidate { run_index: 0, seed: 0, partition: Partition::new(vec![0, 1, 2]) }];
        assert!(matches!(filter_partitions(cands, &subj, 0.099), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn argument_checks() {
        let data = DMatrix::from_element(3, 1, 0.0);
        let subj = subjects(1, 3);
        let cfg = SomConfig::default();
        assert!(run_ensemble(&data, &subj, 0, 0.099, &cfg, 0).is_err());
        assert!(run_ensemble(&data, &subj, 1, 0.0, &cfg, 0).is_err());
        assert!(run_ensemble(&data, &subj, 1, 1.5, &cfg, 0).is_err());
        assert!(matches!(
            run_ensemble(&data, &subj[..2], 1, 0.5, &cfg, 0),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn wide_csv_dump() {
        let subj = subjects(1, 2);
        let cands = vec![
            Candidate { run_index: 4, seed: 0, partition: Partition::new(vec![3, 3]) },
            Candidate { run_index: 9, seed: 0, partition: Partition::new(vec![1, 1]) },
        ];
        let set = filter_partitions(cands, &subj, 0.5).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&["a".into(), "b".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sample_id,run_4,run_9\na,0,0\nb,0,0\n");
    }
}

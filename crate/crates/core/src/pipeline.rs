//! End-to-end orchestration: load or generate, standardize, embed, run the
//! SOM ensemble, build the consensus, score baselines, and measure stability
//! across reseeded reruns.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::consensus::{co_association, kmeans, select_partition, CoAssociationMatrix, ConsensusResult};
use crate::dataset::{generate_synthetic, load_csv, SampleMatrix, SyntheticSpec};
use crate::ensemble::{run_ensemble, EnsembleConfig, PartitionSet};
use crate::error::{Error, Result};
use crate::lle::{lle, Embedding, LleConfig};
use crate::metrics::{validity_report, ValidityReport};
use crate::report::{
    sample_std, Assignment, Baselines, ConsensusReport, DatasetSummary, EnsembleSummary, MethodStability,
    RunReport, StabilityBlock, StageTimings,
};
use crate::seeds::{derive_named, derive_seed};
use crate::som::{partition_from_som, train_som, SomConfig};

/// Restarts for the k-means baseline.
const BASELINE_KMEANS_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Csv { path: PathBuf },
    Synthetic(SyntheticSpec),
}

impl Default for InputSource {
    fn default() -> Self {
        InputSource::Synthetic(SyntheticSpec::default())
    }
}

/// Space in which candidate partitions are scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSpace {
    /// The (optionally standardized) input features.
    #[default]
    Features,
    /// The LLE embedding the ensemble was trained on. Its coordinates all
    /// have unit variance, so with many more dimensions than clusters the
    /// silhouette is dominated by within-cluster coordinates and tends to
    /// grow with k.
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsensusConfig {
    pub k_min: usize,
    /// Clamped to `n - 1` at run time.
    pub k_max: usize,
    pub score_space: ScoreSpace,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            k_min: 2,
            k_max: 20,
            score_space: ScoreSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub standardize: bool,
    pub lle: LleConfig,
    /// Shared SOM settings; the `seed` field is ignored, every run derives its
    /// own from `master_seed`.
    pub som: SomConfig,
    pub ensemble: EnsembleConfig,
    pub consensus: ConsensusConfig,
    pub master_seed: u64,
    pub n_stability_reruns: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputSource::default(),
            standardize: true,
            lle: LleConfig::default(),
            som: SomConfig::default(),
            ensemble: EnsembleConfig::default(),
            consensus: ConsensusConfig::default(),
            master_seed: 0,
            n_stability_reruns: 10,
        }
    }
}

impl PipelineConfig {
    /// Checks everything that can be checked without touching the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if let InputSource::Synthetic(spec) = &self.input {
            spec.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        }
        if self.lle.k_neighbors == 0 || self.lle.dim == 0 {
            return bad("lle.k_neighbors and lle.dim must be >= 1".into());
        }
        if !(self.lle.reg >= 0.0 && self.lle.reg.is_finite()) {
            return bad("lle.reg must be >= 0".into());
        }
        self.som.validate()?;
        if self.ensemble.n_p == 0 {
            return bad("ensemble.n_p must be >= 1".into());
        }
        let t = self.ensemble.ics_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return bad(format!("ensemble.ics_threshold must be in (0, 1], got {t}"));
        }
        let c = &self.consensus;
        if c.k_min < 2 {
            return bad("consensus.k_min must be >= 2".into());
        }
        if c.k_min > c.k_max {
            return bad(format!("consensus.k_min ({}) > consensus.k_max ({})", c.k_min, c.k_max));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Data after loading, standardization and embedding.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub samples: SampleMatrix,
    pub embedding: Embedding,
    /// Generator ground truth per subject, for synthetic input.
    pub true_labels: Option<Vec<usize>>,
}

impl Prepared {
    pub fn score_points(&self, space: ScoreSpace) -> &DMatrix<f64> {
        match space {
            ScoreSpace::Embedding => &self.embedding.values,
            ScoreSpace::Features => self.samples.values(),
        }
    }

    pub fn subjects(&self) -> &[String] {
        self.samples.subject_ids()
    }
}

struct Stopwatch {
    start: Instant,
    last: Instant,
    stages: Vec<(&'static str, std::time::Duration)>,
}

impl Stopwatch {
    fn new() -> Self {
        let now = Instant::now();
        Stopwatch {
            start: now,
            last: now,
            stages: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.stages.push((stage, now - self.last));
        self.last = now;
    }

    fn finish(self) -> StageTimings {
        StageTimings {
            total: self.last - self.start,
            stages: self.stages,
        }
    }
}

/// Loads or generates the data, standardizes if configured, and embeds.
pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    prepare_timed(cfg, &mut Stopwatch::new())
}

fn prepare_timed(cfg: &PipelineConfig, sw: &mut Stopwatch) -> Result<Prepared> {
    let (samples, true_labels) = match &cfg.input {
        InputSource::Csv { path } => (load_csv(path).map_err(Error::at("load"))?, None),
        InputSource::Synthetic(spec) => {
            let cohort = generate_synthetic(spec).map_err(Error::at("generate"))?;
            (cohort.samples, Some(cohort.true_labels))
        }
    };
    sw.lap("load");
    let samples = if cfg.standardize {
        samples.standardized()
    } else {
        samples
    };
    sw.lap("standardize");
    let embedding = lle(&samples, &cfg.lle).map_err(Error::at("lle"))?;
    sw.lap("lle");
    Ok(Prepared {
        samples,
        embedding,
        true_labels,
    })
}

/// Ensemble plus consensus on prepared data.
#[derive(Debug, Clone)]
pub struct ConsensusRun {
    pub partition_set: PartitionSet,
    pub coassoc: CoAssociationMatrix,
    pub result: ConsensusResult,
}

fn k_range(cfg: &PipelineConfig, n: usize) -> Result<(usize, usize)> {
    let k_max = cfg.consensus.k_max.min(n.saturating_sub(1));
    if cfg.consensus.k_min > k_max {
        return Err(Error::ConfigInvalid(format!(
            "consensus.k_min ({}) exceeds the usable maximum {k_max} for {n} samples",
            cfg.consensus.k_min
        )));
    }
    Ok((cfg.consensus.k_min, k_max))
}

/// Runs the SOM ensemble and the consensus step with `master_seed`.
pub fn run_consensus(cfg: &PipelineConfig, data: &Prepared, master_seed: u64) -> Result<ConsensusRun> {
    run_consensus_timed(cfg, data, master_seed, &mut Stopwatch::new())
}

fn run_consensus_timed(
    cfg: &PipelineConfig,
    data: &Prepared,
    master_seed: u64,
    sw: &mut Stopwatch,
) -> Result<ConsensusRun> {
    let (k_min, k_max) = k_range(cfg, data.samples.rows())?;
    let partition_set = run_ensemble(
        &data.embedding.values,
        data.subjects(),
        cfg.ensemble.n_p,
        cfg.ensemble.ics_threshold,
        &cfg.som,
        derive_named(master_seed, "ensemble"),
    )
    .map_err(Error::at("ensemble"))?;
    sw.lap("ensemble");
    let coassoc = co_association(&partition_set).map_err(Error::at("consensus"))?;
    let result = select_partition(
        &coassoc,
        data.score_points(cfg.consensus.score_space),
        data.subjects(),
        k_min,
        k_max,
        derive_named(master_seed, "spectral"),
    )
    .map_err(Error::at("consensus"))?;
    sw.lap("consensus");
    Ok(ConsensusRun {
        partition_set,
        coassoc,
        result,
    })
}

/// One SOM trained with the ensemble's settings, scored like the consensus.
pub fn single_som_report(cfg: &PipelineConfig, data: &Prepared, seed: u64) -> Result<Option<ValidityReport>> {
    let som_cfg = SomConfig { seed, ..cfg.som };
    let model = train_som(&data.embedding.values, &som_cfg)?;
    let p = partition_from_som(&model, &data.embedding.values)?;
    match validity_report(data.score_points(cfg.consensus.score_space), p.labels(), data.subjects()) {
        Ok(r) => Ok(Some(r)),
        Err(Error::SingleCluster | Error::TooFewSamples) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Full run: everything in [`RunOutcome`] is deterministic given the config,
/// except the timings.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub prepared: Prepared,
    pub consensus: ConsensusRun,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut sw = Stopwatch::new();
    let prepared = prepare_timed(cfg, &mut sw)?;
    let consensus = run_consensus_timed(cfg, &prepared, cfg.master_seed, &mut sw)?;

    let points = prepared.score_points(cfg.consensus.score_space);
    let selected_k = consensus.result.selected_k;
    let km = kmeans(
        points,
        selected_k,
        derive_named(cfg.master_seed, "kmeans_baseline"),
        BASELINE_KMEANS_RESTARTS,
    )
    .map_err(Error::at("baselines"))?;
    let kmeans_report =
        validity_report(points, km.labels(), prepared.subjects()).map_err(Error::at("baselines"))?;
    let single_som = single_som_report(cfg, &prepared, derive_named(cfg.master_seed, "single_som"))
        .map_err(Error::at("baselines"))?;
    sw.lap("baselines");

    let report = build_report(
        cfg,
        &prepared,
        &consensus,
        Baselines {
            kmeans: kmeans_report,
            single_som,
        },
        None,
        sw.finish(),
    );
    Ok(RunOutcome {
        report,
        prepared,
        consensus,
    })
}

fn build_report(
    cfg: &PipelineConfig,
    prepared: &Prepared,
    run: &ConsensusRun,
    baselines: Baselines,
    stability: Option<StabilityBlock>,
    timings: StageTimings,
) -> RunReport {
    let ps = &run.partition_set;
    let labels = run.result.sample_partition.labels();
    let assignments = (0..prepared.samples.rows())
        .map(|i| Assignment {
            sample_id: prepared.samples.sample_ids()[i].clone(),
            subject_id: prepared.samples.subject_ids()[i].clone(),
            cluster: labels[i],
        })
        .collect();
    RunReport {
        config: cfg.clone(),
        dataset: DatasetSummary {
            n_samples: prepared.samples.rows(),
            n_features: prepared.samples.cols(),
            n_subjects: prepared.samples.subjects().len(),
            standardized: cfg.standardize,
            embedding_dim: prepared.embedding.dim(),
        },
        ensemble: EnsembleSummary {
            n_runs: ps.n_runs,
            n_retained: ps.len(),
            ics_threshold: ps.threshold,
            mean_retained_ics: ps.ics_values.iter().sum::<f64>() / ps.len() as f64,
        },
        consensus: ConsensusReport {
            selected_k: run.result.selected_k,
            selected: *run.result.selected_report(),
            per_k: run.result.per_k_reports.clone(),
            assignments,
            subject_labels: run.result.subject_labels.clone(),
        },
        baselines,
        stability,
        timings,
    }
}

pub const CONSENSUS_METHOD: &str = "consensus";
pub const SINGLE_SOM_METHOD: &str = "single_som";

/// Per-rerun scores behind a [`StabilityBlock`].
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRuns {
    pub consensus: Vec<ValidityReport>,
    pub single_som: Vec<ValidityReport>,
}

/// Reruns the consensus and a single SOM `n_stability_reruns` times with
/// distinct derived seeds on the same prepared data and reports the sample
/// standard deviation of SC, CH and DB for each.
pub fn stability_study(cfg: &PipelineConfig, data: &Prepared) -> Result<(StabilityBlock, StabilityRuns)> {
    let n = cfg.n_stability_reruns;
    if n < 2 {
        return Err(Error::ConfigInvalid("n_stability_reruns must be >= 2".into()));
    }
    let base = derive_named(cfg.master_seed, "stability");
    let mut runs = StabilityRuns {
        consensus: Vec::with_capacity(n),
        single_som: Vec::with_capacity(n),
    };
    for r in 0..n {
        let seed = derive_seed(base, r as u64);
        let c = run_consensus(cfg, data, seed)?;
        runs.consensus.push(*c.result.selected_report());
        let s = single_som_report(cfg, data, derive_named(seed, "single_som"))
            .map_err(Error::at("stability"))?
            .ok_or_else(|| Error::Stage {
                stage: "stability",
                source: Box::new(Error::SingleCluster),
            })?;
        runs.single_som.push(s);
    }
    let summarize = |name: &str, reps: &[ValidityReport]| {
        let col = |f: fn(&ValidityReport) -> f64| sample_std(&reps.iter().map(f).collect::<Vec<_>>());
        MethodStability {
            method: name.to_string(),
            std_sc: col(|r| r.sc),
            std_ch: col(|r| r.ch),
            std_db: col(|r| r.db),
        }
    };
    let block = StabilityBlock {
        n_reruns: n,
        methods: vec![
            summarize(CONSENSUS_METHOD, &runs.consensus),
            summarize(SINGLE_SOM_METHOD, &runs.single_som),
        ],
    };
    Ok((block, runs))
}

/// [`run_pipeline`] followed by [`stability_study`] on the same data; the
/// report carries the stability block.
pub fn run_with_stability(cfg: &PipelineConfig) -> Result<RunOutcome> {
    let mut outcome = run_pipeline(cfg)?;
    let t = Instant::now();
    let (block, _) = stability_study(cfg, &outcome.prepared)?;
    let elapsed = t.elapsed();
    outcome.report.stability = Some(block);
    outcome.report.timings.stages.push(("stability", elapsed));
    outcome.report.timings.total += elapsed;
    Ok(outcome)
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_order_rejected_before_compute() {
        let cfg = PipelineConfig {
            consensus: ConsensusConfig {
                k_min: 6,
                k_max: 3,
                ..Default::default()
            },
            input: InputSource::Csv {
                path: "/nonexistent.csv".into(),
            },
            ..Default::default()
        };
        assert!(matches!(run_pipeline(&cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn config_defaults_from_empty_json() {
        let cfg = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.lle.k_neighbors, 30);
        assert_eq!(cfg.lle.dim, 30);
        assert_eq!(cfg.ensemble.n_p, 1000);
        assert_eq!(cfg.ensemble.ics_threshold, 0.099);
        assert_eq!(cfg.som.iter_max, 10_000);
        assert_eq!((cfg.som.grid_rows, cfg.som.grid_cols), (4, 4));
        assert_eq!((cfg.consensus.k_min, cfg.consensus.k_max), (2, 20));
    }

    #[test]
    fn partial_json_overrides() {
        let cfg = PipelineConfig::from_json(
            r#"{"input":{"csv":{"path":"x.csv"}},"ensemble":{"n_p":5},"master_seed":9}"#,
        )
        .unwrap();
        assert_eq!(cfg.ensemble.n_p, 5);
        assert_eq!(cfg.ensemble.ics_threshold, 0.099);
        assert_eq!(cfg.master_seed, 9);
        assert!(matches!(cfg.input, InputSource::Csv { .. }));
    }

    #[test]
    fn stability_needs_two_reruns() {
        let cfg = PipelineConfig {
            n_stability_reruns: 1,
            ..Default::default()
        };
        let prepared = Prepared {
            samples: crate::dataset::generate_synthetic(&SyntheticSpec {
                n_subjects: 4,
                n_features: 3,
                n_true_clusters: 2,
                ..Default::default()
            })
            .unwrap()
            .samples,
            embedding: Embedding {
                values: DMatrix::zeros(12, 1),
                sample_ids: vec![],
                subject_ids: vec![],
                eigenvalues: vec![],
            },
            true_labels: None,
        };
        assert!(matches!(stability_study(&cfg, &prepared), Err(Error::ConfigInvalid(_))));
    }
}

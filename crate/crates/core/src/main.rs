//! Command-line front end. Exit codes: 0 success, 1 invalid input or
//! configuration, 2 runtime or numerical failure.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use somcluster::dataset::{generate_synthetic, load_csv, SyntheticSpec};
use somcluster::error::{Error, Result};
use somcluster::lle::lle;
use somcluster::metrics::validity_report;
use somcluster::pipeline::{run_pipeline, run_with_stability, with_threads, InputSource, PipelineConfig, ScoreSpace};
use somcluster::report::{read_assignments, write_assignments};

#[derive(Parser)]
#[command(name = "somcluster", version, about = "Ensemble SOM clustering with co-association consensus")]
struct Cli {
    /// Worker threads for ensemble members and candidate cluster counts (0 = one per core).
    /// Results do not depend on this value.
    #[arg(long, global = true, env = "CONSENSUS_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort as a dataset CSV.
    Generate(GenerateArgs),
    /// Run LLE only and write the embedding CSV.
    Embed(EmbedArgs),
    /// Run the full pipeline and write report.json.
    Cluster(ClusterArgs),
    /// Run the full pipeline plus the rerun stability study.
    Stability(StabilityArgs),
    /// Score an existing labeling of a dataset.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator seed.
    #[arg(long)]
    seed: u64,
    /// Number of subjects.
    #[arg(long, default_value_t = 57)]
    n_subjects: usize,
    /// Replicate samples per subject.
    #[arg(long, default_value_t = 3)]
    samples_per_subject: usize,
    /// Feature count.
    #[arg(long, default_value_t = 40)]
    n_features: usize,
    /// Number of true clusters.
    #[arg(long, default_value_t = 4)]
    n_clusters: usize,
    /// Centroid distance in units of the within-cluster standard distance.
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    /// Output dataset CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write `subject_id,true_cluster` to this file.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV (`sample_id,subject_id,f0,...`). Without it the config's input is used
    /// (by default a synthetic cohort).
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Z-score features before embedding (default on).
    #[arg(long, conflicts_with = "no_standardize")]
    standardize: bool,
    /// Use features as loaded.
    #[arg(long)]
    no_standardize: bool,
    /// LLE neighbors.
    #[arg(long)]
    lle_k: Option<usize>,
    /// LLE output dimension.
    #[arg(long)]
    lle_dim: Option<usize>,
    /// LLE Gram regularization.
    #[arg(long)]
    lle_reg: Option<f64>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    seed: u64,
    /// SOM grid rows.
    #[arg(long)]
    grid_rows: Option<usize>,
    /// SOM grid columns.
    #[arg(long)]
    grid_cols: Option<usize>,
    /// SOM initial learning rate.
    #[arg(long)]
    lr_init: Option<f64>,
    /// SOM learning-rate stop threshold.
    #[arg(long)]
    lr_threshold: Option<f64>,
    /// SOM initial neighborhood radius.
    #[arg(long)]
    radius_init: Option<f64>,
    /// SOM iteration cap (one sample presentation per iteration).
    #[arg(long)]
    iter_max: Option<usize>,
    /// Ensemble size (SOM runs before filtering).
    #[arg(long)]
    n_p: Option<usize>,
    /// Keep partitions with ICS strictly below this.
    #[arg(long)]
    ics_threshold: Option<f64>,
    /// Smallest candidate cluster count.
    #[arg(long)]
    k_min: Option<usize>,
    /// Largest candidate cluster count (clamped to n - 1).
    #[arg(long)]
    k_max: Option<usize>,
    /// Space in which candidates and baselines are scored.
    #[arg(long, value_enum)]
    score_space: Option<SpaceArg>,
    /// Output directory (created if missing).
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
    /// Also write assignments.csv.
    #[arg(long)]
    assignments: bool,
    /// Also write coassoc.csv.
    #[arg(long)]
    coassoc: bool,
    /// Also write partitions.csv (retained ensemble members, one column per run).
    #[arg(long)]
    partitions: bool,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    cluster: ClusterArgs,
    /// Number of reseeded reruns (at least 2).
    #[arg(long)]
    reruns: Option<usize>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output embedding CSV (`sample_id,subject_id,e0,...`).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Dataset CSV the labels refer to.
    #[arg(long, short)]
    input: PathBuf,
    /// Labels CSV with `sample_id` and `cluster` columns (e.g. assignments.csv).
    #[arg(long, short)]
    labels: PathBuf,
    /// Z-score features before scoring.
    #[arg(long)]
    standardize: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Features,
    Embedding,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = cli.threads;
    match with_threads(threads, || run(cli.command)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a, None),
        Command::Stability(a) => cluster(a.cluster, Some(a.reruns)),
        Command::Metrics(a) => metrics(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_subjects: a.n_subjects,
        samples_per_subject: a.samples_per_subject,
        n_features: a.n_features,
        n_true_clusters: a.n_clusters,
        cluster_separation: a.separation,
        seed: a.seed,
    };
    let cohort = generate_synthetic(&spec)?;
    cohort.samples.save_csv(&a.out)?;
    if let Some(path) = a.truth {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "subject_id,true_cluster")?;
        for (s, l) in cohort.samples.subjects().iter().zip(&cohort.true_labels) {
            writeln!(out, "{s},{l}")?;
        }
        out.flush()?;
    }
    Ok(())
}

fn base_config(a: &InputArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::from_json(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(path) = &a.input {
        cfg.input = InputSource::Csv { path: path.clone() };
    }
    if a.standardize {
        cfg.standardize = true;
    }
    if a.no_standardize {
        cfg.standardize = false;
    }
    set(&mut cfg.lle.k_neighbors, a.lle_k);
    set(&mut cfg.lle.dim, a.lle_dim);
    set(&mut cfg.lle.reg, a.lle_reg);
    Ok(cfg)
}

fn set<T>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

fn embed(a: EmbedArgs) -> Result<()> {
    let cfg = base_config(&a.input)?;
    cfg.validate()?;
    let samples = match &cfg.input {
        InputSource::Csv { path } => load_csv(path)?,
        InputSource::Synthetic(spec) => generate_synthetic(spec)?.samples,
    };
    let samples = if cfg.standardize { samples.standardized() } else { samples };
    lle(&samples, &cfg.lle)?.save_csv(&a.out)
}

fn cluster(a: ClusterArgs, reruns: Option<Option<usize>>) -> Result<()> {
    let mut cfg = base_config(&a.input)?;
    cfg.master_seed = a.seed;
    set(&mut cfg.som.grid_rows, a.grid_rows);
    set(&mut cfg.som.grid_cols, a.grid_cols);
    set(&mut cfg.som.lr_init, a.lr_init);
    set(&mut cfg.som.lr_threshold, a.lr_threshold);
    set(&mut cfg.som.radius_init, a.radius_init);
    set(&mut cfg.som.iter_max, a.iter_max);
    set(&mut cfg.ensemble.n_p, a.n_p);
    set(&mut cfg.ensemble.ics_threshold, a.ics_threshold);
    set(&mut cfg.consensus.k_min, a.k_min);
    set(&mut cfg.consensus.k_max, a.k_max);
    if let Some(space) = a.score_space {
        cfg.consensus.score_space = match space {
            SpaceArg::Features => ScoreSpace::Features,
            SpaceArg::Embedding => ScoreSpace::Embedding,
        };
    }
    let outcome = match reruns {
        None => run_pipeline(&cfg)?,
        Some(n) => {
            set(&mut cfg.n_stability_reruns, n);
            run_with_stability(&cfg)?
        }
    };

    std::fs::create_dir_all(&a.out_dir)?;
    let mut json = outcome.report.to_json()?;
    json.push('\n');
    std::fs::write(a.out_dir.join("report.json"), json)?;
    if a.assignments {
        let file = create(&a.out_dir, "assignments.csv")?;
        write_assignments(&outcome.report.consensus.assignments, file)?;
    }
    if a.coassoc {
        outcome.consensus.coassoc.write_csv(create(&a.out_dir, "coassoc.csv")?)?;
    }
    if a.partitions {
        let file = create(&a.out_dir, "partitions.csv")?;
        outcome
            .consensus
            .partition_set
            .write_csv(outcome.prepared.samples.sample_ids(), file)?;
    }
    let t = &outcome.report.timings;
    for (stage, d) in &t.stages {
        eprintln!("{stage:>12}: {:>9.3}s", d.as_secs_f64());
    }
    eprintln!("{:>12}: {:>9.3}s", "total", t.total.as_secs_f64());
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let samples = load_csv(&a.input)?;
    let samples = if a.standardize { samples.standardized() } else { samples };
    let rows = read_assignments(File::open(&a.labels)?)?;
    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(rows.len());
    for (id, cluster) in &rows {
        if by_id.insert(id, *cluster).is_some() {
            return Err(Error::DuplicateSampleId(id.clone()));
        }
    }
    if by_id.len() != samples.rows() {
        return Err(Error::LengthMismatch {
            left: by_id.len(),
            right: samples.rows(),
        });
    }
    let labels = samples
        .sample_ids()
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no label for sample {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = validity_report(samples.values(), &labels, samples.subject_ids())?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match a.out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

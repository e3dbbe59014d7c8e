//! Serializable run report.
//!
//! Field order is fixed by the struct definitions and floats print in their
//! shortest round-trip form, so a report is byte-identical across reruns with
//! the same configuration. Wall-clock timings are kept out of the JSON for
//! that reason; they travel alongside in [`StageTimings`].

use std::io::{Read, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::consensus::{CandidateReport, SubjectLabel};
use crate::error::{Error, Result};
use crate::metrics::ValidityReport;
use crate::pipeline::PipelineConfig;

/// `+inf` sentinels (and NaN) serialize as `null` and read back as `+inf`.
pub mod nonfinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub ensemble: EnsembleSummary,
    pub consensus: ConsensusReport,
    pub baselines: Baselines,
    pub stability: Option<StabilityBlock>,
    #[serde(skip)]
    pub timings: StageTimings,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_subjects: usize,
    pub standardized: bool,
    pub embedding_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_runs: usize,
    pub n_retained: usize,
    pub ics_threshold: f64,
    pub mean_retained_ics: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub sample_id: String,
    pub subject_id: String,
    pub cluster: usize,
}

/// Writes `sample_id,subject_id,cluster` rows.
pub fn write_assignments<W: Write>(rows: &[Assignment], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `(sample_id, cluster)` pairs from a CSV with at least the columns
/// `sample_id` and `cluster`; other columns are ignored.
pub fn read_assignments<R: Read>(input: R) -> Result<Vec<(String, usize)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingHeader(format!("labels file has no `{name}` column")))
    };
    let (id_col, cl_col) = (col("sample_id")?, col("cluster")?);
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(cl_col).unwrap_or("");
        let cluster = cell.trim().parse().map_err(|_| Error::NonNumericCell {
            row,
            col: cl_col,
            value: cell.to_string(),
        })?;
        rows.push((rec.get(id_col).unwrap_or("").to_string(), cluster));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub selected_k: usize,
    pub selected: ValidityReport,
    pub per_k: Vec<CandidateReport>,
    pub assignments: Vec<Assignment>,
    pub subject_labels: Vec<SubjectLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// k-means on the scoring space at the selected cluster count.
    pub kmeans: ValidityReport,
    /// A single SOM with the ensemble's configuration.
    pub single_som: Option<ValidityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStability {
    pub method: String,
    #[serde(with = "nonfinite_as_null")]
    pub std_sc: f64,
    #[serde(with = "nonfinite_as_null")]
    pub std_ch: f64,
    #[serde(with = "nonfinite_as_null")]
    pub std_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBlock {
    pub n_reruns: usize,
    pub methods: Vec<MethodStability>,
}

impl StabilityBlock {
    pub fn method(&self, name: &str) -> Option<&MethodStability> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(&'static str, Duration)>,
    pub total: Duration,
}

impl StageTimings {
    pub fn stage_sum(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

/// Sample standard deviation (n - 1 denominator). Identical values
/// (including identical infinities) and fewer than two values give 0; any
/// other non-finite input gives `+inf`.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

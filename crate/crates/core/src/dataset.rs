//! Feature matrices: CSV ingestion, validation, standardization and a seeded
//! synthetic cohort generator.
//!
//! CSV layout is fixed: a header `sample_id,subject_id,f0,f1,...` followed by
//! one row per sample. Identifiers are restricted to `[A-Za-z0-9_-]+`, so no
//! quoting is ever needed.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// n × f feature matrix with a sample id and subject id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
    sample_ids: Vec<String>,
    subject_ids: Vec<String>,
}

impl SampleMatrix {
    pub fn new(values: DMatrix<f64>, sample_ids: Vec<String>, subject_ids: Vec<String>) -> Result<Self> {
        let n = values.nrows();
        if sample_ids.len() != n || subject_ids.len() != n {
            return Err(Error::InvalidMatrix(format!(
                "{n} rows but {} sample ids and {} subject ids",
                sample_ids.len(),
                subject_ids.len()
            )));
        }
        if let Some(((r, c), v)) = values
            .iter()
            .enumerate()
            .map(|(k, v)| ((k % n.max(1), k / n.max(1)), v))
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::NonNumericCell {
                row: r,
                col: c,
                value: v.to_string(),
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for id in sample_ids.iter().chain(&subject_ids) {
            check_id(id)?;
        }
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        Ok(SampleMatrix {
            values,
            sample_ids,
            subject_ids,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    /// Distinct subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.subject_ids
            .iter()
            .filter(|s| seen.insert(s.as_str()))
            .cloned()
            .collect()
    }

    /// Per-feature z-scores (population std). Constant features become 0.
    pub fn standardized(&self) -> SampleMatrix {
        let n = self.rows() as f64;
        let mut values = self.values.clone();
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            for v in col.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
        SampleMatrix {
            values,
            sample_ids: self.sample_ids.clone(),
            subject_ids: self.subject_ids.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().from_writer(out);
        let mut header = vec!["sample_id".to_string(), "subject_id".to_string()];
        header.extend((0..self.cols()).map(|j| format!("f{j}")));
        wtr.write_record(&header)?;
        let mut record = Vec::with_capacity(self.cols() + 2);
        for i in 0..self.rows() {
            record.clear();
            record.push(self.sample_ids[i].clone());
            record.push(self.subject_ids[i].clone());
            // `Display` for f64 prints the shortest string that round-trips exactly.
            record.extend(self.values.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn check_id(id: &str) -> Result<()> {
    if !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    {
        Ok(())
    } else {
        Err(Error::InvalidId(id.to_string()))
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file))
}

pub fn read_csv<R: Read>(input: R) -> Result<SampleMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(Error::EmptyFile),
        Some(r) => r?,
    };
    if header.len() == 1 && header[0].trim().is_empty() {
        return Err(Error::EmptyFile);
    }
    validate_header(&header, "f")?;
    let width = header.len();
    let n_features = width - 2;

    let mut sample_ids = Vec::new();
    let mut subject_ids = Vec::new();
    let mut data = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec?;
        // csv yields a single empty field for blank lines
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(Error::RaggedRow {
                line: row + 2,
                expected: width,
                found: rec.len(),
            });
        }
        sample_ids.push(rec[0].to_string());
        subject_ids.push(rec[1].to_string());
        for col in 0..n_features {
            let cell = &rec[col + 2];
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        row,
                        col,
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    if sample_ids.is_empty() {
        return Err(Error::EmptyFile);
    }
    let values = DMatrix::from_row_slice(sample_ids.len(), n_features, &data);
    SampleMatrix::new(values, sample_ids, subject_ids)
}

/// Checks `sample_id,subject_id,{prefix}0,{prefix}1,...` with at least one column.
pub(crate) fn validate_header(header: &csv::StringRecord, prefix: &str) -> Result<()> {
    if header.len() < 3 || &header[0] != "sample_id" || &header[1] != "subject_id" {
        return Err(Error::MissingHeader(format!(
            "expected `sample_id,subject_id,{prefix}0,...`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("{prefix}{j}") {
            return Err(Error::MissingHeader(format!(
                "column {} should be `{prefix}{j}`, found `{name}`",
                j + 2
            )));
        }
    }
    Ok(())
}

/// Parameters of the synthetic cohort.
///
/// Each subject belongs to one true cluster. Subject means are drawn around
/// their cluster centroid with per-feature std 1, so the cluster's
/// within-cluster standard distance (RMS distance of subject means from the
/// centroid) is `sqrt(n_features)`. Each replicate adds per-feature noise with
/// std 0.25. Cluster centroids sit on orthogonal random directions with
/// pairwise distance `cluster_separation * sqrt(n_features)`, i.e.
/// `cluster_separation` is measured in units of the within-cluster standard
/// distance (exact when `n_true_clusters <= n_features`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_subjects: usize,
    pub samples_per_subject: usize,
    pub n_features: usize,
    pub n_true_clusters: usize,
    pub cluster_separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects: 57,
            samples_per_subject: 3,
            n_features: 40,
            n_true_clusters: 4,
            cluster_separation: 10.0,
            seed: 0,
        }
    }
}

/// Replicate std relative to the within-cluster std.
pub const REPLICATE_STD_RATIO: f64 = 0.25;

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.n_subjects == 0 || self.samples_per_subject == 0 || self.n_features == 0 {
            return bad("all counts must be >= 1");
        }
        if self.n_true_clusters == 0 || self.n_true_clusters > self.n_subjects {
            return bad("n_true_clusters must be in 1..=n_subjects");
        }
        if !(self.cluster_separation.is_finite() && self.cluster_separation >= 0.0) {
            return bad("cluster_separation must be finite and >= 0");
        }
        Ok(())
    }
}

/// Synthetic dataset plus the generator's ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub samples: SampleMatrix,
    /// True cluster of each subject, in subject order (`subj000`, `subj001`, ...).
    pub true_labels: Vec<usize>,
    /// Per-subject means the replicates were drawn around.
    pub subject_means: DMatrix<f64>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let f = spec.n_features;
    let c = spec.n_true_clusters;

    let spread = (f as f64).sqrt();
    let centroids = centroid_directions(c, f, &mut rng)
        .scale(spec.cluster_separation * spread / std::f64::consts::SQRT_2);

    // balanced assignment, then shuffled
    let mut true_labels: Vec<usize> = (0..spec.n_subjects).map(|s| s % c).collect();
    true_labels.shuffle(&mut rng);

    let n = spec.n_subjects * spec.samples_per_subject;
    let mut values = DMatrix::zeros(n, f);
    let mut subject_means = DMatrix::zeros(spec.n_subjects, f);
    let mut sample_ids = Vec::with_capacity(n);
    let mut subject_ids = Vec::with_capacity(n);
    let width = digits(spec.n_subjects);
    for s in 0..spec.n_subjects {
        let centroid = centroids.row(true_labels[s]);
        for j in 0..f {
            let z: f64 = StandardNormal.sample(&mut rng);
            subject_means[(s, j)] = centroid[j] + z;
        }
        let subject = format!("subj{s:0width$}");
        for r in 0..spec.samples_per_subject {
            let row = s * spec.samples_per_subject + r;
            for j in 0..f {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[(row, j)] = subject_means[(s, j)] + REPLICATE_STD_RATIO * z;
            }
            sample_ids.push(format!("{subject}_r{r}"));
            subject_ids.push(subject.clone());
        }
    }
    Ok(SyntheticCohort {
        samples: SampleMatrix::new(values, sample_ids, subject_ids)?,
        true_labels,
        subject_means,
    })
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(3)
}

/// `c` unit rows; mutually orthogonal when `c <= f`.
fn centroid_directions(c: usize, f: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut dirs = DMatrix::<f64>::zeros(c, f);
    for i in 0..c {
        loop {
            let mut v: Vec<f64> = (0..f).map(|_| StandardNormal.sample(&mut *rng)).collect();
            if i < f {
                // Gram-Schmidt against previous directions
                for p in 0..i {
                    let dot: f64 = (0..f).map(|j| v[j] * dirs[(p, j)]).sum();
                    for (j, x) in v.iter_mut().enumerate() {
                        *x -= dot * dirs[(p, j)];
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (j, x) in v.iter().enumerate() {
                    dirs[(i, j)] = x / norm;
                }
                break;
            }
        }
    }
    dirs
}

//! Consensus over the retained ensemble: co-association counts, spectral
//! clustering of the count graph for a range of cluster counts, selection by
//! silhouette, and the per-subject majority mapping.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Partition, PartitionSet};
use crate::error::{Error, Result};
use crate::linalg::{rows_of, sq_dist, SymEigen};
use crate::metrics::{self, majority, subject_groups, ValidityReport};
use crate::seeds::derive_seed;

/// Symmetric co-occurrence counts over `m` partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoAssociationMatrix {
    pub n: usize,
    pub m: usize,
    /// Row-major `n x n`.
    pub counts: Vec<u32>,
}

impl CoAssociationMatrix {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    pub fn from_counts(n: usize, m: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != n * n {
            return Err(Error::DimMismatch {
                expected: n * n,
                found: counts.len(),
            });
        }
        Ok(CoAssociationMatrix { n, m, counts })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    /// Square CSV of integers, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `counts[i][j]` = number of partitions placing `i` and `j` in one cluster.
pub fn co_association(ps: &PartitionSet) -> Result<CoAssociationMatrix> {
    co_association_of(&ps.partitions)
}

pub fn co_association_of(partitions: &[Partition]) -> Result<CoAssociationMatrix> {
    let first = partitions.first().ok_or(Error::EmptyPartitionSet)?;
    let n = first.n_samples();
    let mut counts = vec![0u32; n * n];
    for p in partitions {
        if p.n_samples() != n {
            return Err(Error::LengthMismatch {
                left: p.n_samples(),
                right: n,
            });
        }
        let l = p.labels();
        for i in 0..n {
            for j in i..n {
                if l[i] == l[j] {
                    counts[i * n + j] += 1;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            counts[i * n + j] = counts[j * n + i];
        }
    }
    Ok(CoAssociationMatrix {
        n,
        m: partitions.len(),
        counts,
    })
}

/// Result of a k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub partition: Partition,
    /// Row-major `k x dim`.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Within-cluster sum of squares after every assignment step of the
    /// winning restart.
    pub inertia_trace: Vec<f64>,
}

const KMEANS_MAX_ITER: usize = 300;

/// Lloyd's algorithm with k-means++ seeding; best of `n_restarts` by
/// within-cluster sum of squares. Labels are canonicalized.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64, n_restarts: usize) -> Result<Partition> {
    Ok(kmeans_fit(x, k, seed, n_restarts)?.partition)
}

pub fn kmeans_fit(x: &DMatrix<f64>, k: usize, seed: u64, n_restarts: usize) -> Result<KMeansFit> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let rows = rows_of(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..n_restarts.max(1) {
        let fit = lloyd(&rows, k, &mut rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("at least one restart");
    // relabel by first occurrence and keep centroids indexed by the new labels
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for &l in best.partition.labels() {
        if !order.contains(&l) {
            order.push(l);
        }
    }
    let unused: Vec<usize> = (0..k).filter(|c| !order.contains(c)).collect();
    order.extend(unused);
    best.centroids = order.iter().map(|&c| best.centroids[c].clone()).collect();
    best.partition = best.partition.canonical();
    Ok(best)
}

fn plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // every point coincides with a centroid already
            rng.random_range(0..n)
        };
        centroids.push(rows[pick].clone());
        let c = centroids.last().unwrap();
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, c));
        }
    }
    centroids
}

fn assign(rows: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize], d2: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, cent) in centroids.iter().enumerate() {
            let d = sq_dist(r, cent);
            if d < best.1 {
                best = (c, d);
            }
        }
        labels[i] = best.0;
        d2[i] = best.1;
        total += best.1;
    }
    total
}

fn lloyd(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = rows.len();
    let dim = rows[0].len();
    let mut centroids = plus_plus(rows, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut d2 = vec![0.0; n];
    let mut trace = Vec::new();
    let mut prev_labels = Vec::new();

    for _ in 0..KMEANS_MAX_ITER {
        let inertia = assign(rows, &centroids, &mut labels, &mut d2);
        trace.push(inertia);
        if labels == prev_labels {
            break;
        }
        prev_labels.clone_from(&labels);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        // empty clusters take the point farthest from its current centroid
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                d2[far] = 0.0;
                centroids[c] = rows[far].clone();
            }
        }
    }
    let inertia = *trace.last().unwrap();
    KMeansFit {
        partition: Partition::new(labels),
        centroids,
        inertia,
        inertia_trace: trace,
    }
}

/// Restarts used by the spectral step's k-means.
pub const SPECTRAL_KMEANS_RESTARTS: usize = 10;

/// Eigenbasis of the symmetric normalized Laplacian
/// `I - D^{-1/2} A D^{-1/2}` of the co-association graph. The diagonal
/// counts (`m`) are kept as self-loops, so a sample never co-clustered with
/// anything still has positive degree and forms its own component.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eig: SymEigen,
}

impl SpectralBasis {
    pub fn new(w: &CoAssociationMatrix) -> Result<Self> {
        let n = w.n;
        let a = w.to_dense();
        let mut inv_sqrt = Vec::with_capacity(n);
        for i in 0..n {
            let deg: f64 = a.row(i).sum();
            if deg <= 0.0 {
                return Err(Error::IsolatedNode(i));
            }
            inv_sqrt.push(1.0 / deg.sqrt());
        }
        let lap = DMatrix::from_fn(n, n, |i, j| {
            let off = a[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            if i == j {
                1.0 - off
            } else {
                -off
            }
        });
        Ok(SpectralBasis { eig: SymEigen::new(lap)? })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig.values.iter().copied().collect()
    }

    /// Rows of the `k` bottom eigenvectors, each scaled to unit length.
    pub fn spectral_rows(&self, k: usize) -> DMatrix<f64> {
        let mut u = self.eig.vectors.columns(0, k).into_owned();
        for mut row in u.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        u
    }

    pub fn partition(&self, k: usize, seed: u64) -> Result<Partition> {
        let n = self.eig.values.len();
        if k < 2 || k >= n {
            return Err(Error::KTooLarge { k, n });
        }
        kmeans(&self.spectral_rows(k), k, seed, SPECTRAL_KMEANS_RESTARTS)
    }
}

/// Spectral clustering of the co-association graph into `k` groups.
pub fn spectral_partition(w: &CoAssociationMatrix, k: usize, seed: u64) -> Result<Partition> {
    if k < 2 || k >= w.n {
        return Err(Error::KTooLarge { k, n: w.n });
    }
    SpectralBasis::new(w)?.partition(k, seed)
}

/// One evaluated cluster count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub k: usize,
    #[serde(flatten)]
    pub report: ValidityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectLabel {
    pub subject_id: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    pub sample_partition: Partition,
    pub subject_labels: Vec<SubjectLabel>,
    pub per_k_reports: Vec<CandidateReport>,
    pub selected_k: usize,
}

impl ConsensusResult {
    pub fn selected_report(&self) -> &ValidityReport {
        &self
            .per_k_reports
            .iter()
            .find(|c| c.k == self.selected_k)
            .expect("selected k is among the reports")
            .report
    }
}

/// Evaluates every `k` in `k_min..=k_max` and keeps the partition with the
/// largest silhouette on `x_for_sc` (ties go to the smaller `k`).
///
/// Candidates whose metrics cannot be computed (fewer than two distinct
/// clusters) are skipped.
pub fn select_partition(
    w: &CoAssociationMatrix,
    x_for_sc: &DMatrix<f64>,
    subjects: &[String],
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<ConsensusResult> {
    if k_min < 2 || k_min > k_max || k_max >= w.n {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= k_min <= k_max < n, got k_min={k_min}, k_max={k_max}, n={}",
            w.n
        )));
    }
    if x_for_sc.nrows() != w.n {
        return Err(Error::LengthMismatch {
            left: w.n,
            right: x_for_sc.nrows(),
        });
    }
    let basis = SpectralBasis::new(w)?;
    let evaluated = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let p = basis.partition(k, derive_seed(seed, k as u64))?;
            Ok((k, p))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_k_reports = Vec::new();
    let mut best: Option<(usize, f64, Partition)> = None;
    for (k, p) in evaluated {
        let report = match metrics::validity_report(x_for_sc, p.labels(), subjects) {
            Ok(r) => r,
            Err(Error::SingleCluster | Error::TooFewSamples) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| report.sc > b.1) {
            best = Some((k, report.sc, p));
        }
        per_k_reports.push(CandidateReport { k, report });
    }
    let (selected_k, _, sample_partition) = best.ok_or(Error::AllCandidatesDegenerate)?;
    let subject_labels = map_to_subjects(sample_partition.labels(), subjects)?;
    Ok(ConsensusResult {
        sample_partition,
        subject_labels,
        per_k_reports,
        selected_k,
    })
}

/// Majority label of each subject (ties go to the smallest label), subjects
/// in order of first appearance.
pub fn map_to_subjects(labels: &[usize], subjects: &[String]) -> Result<Vec<SubjectLabel>> {
    if labels.len() != subjects.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: subjects.len(),
        });
    }
    Ok(subject_groups(subjects)
        .into_iter()
        .map(|(s, rows)| SubjectLabel {
            subject_id: s.to_string(),
            cluster: majority(rows.iter().map(|&i| labels[i])).0,
        })
        .collect())
}

//! Internal cluster-validity indices and the intra-subject consistency score.
//!
//! All distances are Euclidean. Labels are arbitrary `usize` values; every
//! index is invariant under renaming them.
//!
//! Degenerate geometry does not raise errors where a model-selection loop
//! needs to keep going: Calinski-Harabasz returns `+inf` when the
//! within-cluster sum of squares is zero, and Davies-Bouldin returns `+inf`
//! when two centroids coincide. These sentinels serialize as JSON `null`.
//!
//! ICS is the fraction of samples whose label differs from the majority label
//! of their subject (majority ties resolve to the smallest label).

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, rows_of};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub sc: f64,
    #[serde(with = "crate::report::nonfinite_as_null")]
    pub ch: f64,
    #[serde(with = "crate::report::nonfinite_as_null")]
    pub db: f64,
    pub ics: f64,
    pub n_clusters: usize,
}

/// Computes SC, CH, DB on `points` and ICS against `subjects`.
pub fn validity_report(points: &DMatrix<f64>, labels: &[usize], subjects: &[String]) -> Result<ValidityReport> {
    Ok(ValidityReport {
        sc: silhouette(points, labels)?,
        ch: calinski_harabasz(points, labels)?,
        db: davies_bouldin(points, labels)?,
        ics: ics(labels, subjects)?,
        n_clusters: n_clusters(labels),
    })
}

pub fn n_clusters(labels: &[usize]) -> usize {
    let mut l = labels.to_vec();
    l.sort_unstable();
    l.dedup();
    l.len()
}

/// Members of each cluster, clusters ordered by label value.
fn groups(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        map.entry(l).or_default().push(i);
    }
    map.into_values().collect()
}

fn check_len(points: &DMatrix<f64>, labels: &[usize]) -> Result<()> {
    if points.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: points.nrows(),
        });
    }
    Ok(())
}

fn centroid(rows: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; rows[0].len()];
    for &i in members {
        for (acc, v) in c.iter_mut().zip(&rows[i]) {
            *acc += v;
        }
    }
    let m = members.len() as f64;
    c.iter_mut().for_each(|v| *v /= m);
    c
}

/// Mean silhouette width. Samples in singleton clusters contribute 0.
pub fn silhouette(points: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_len(points, labels)?;
    let n = labels.len();
    if n < 3 {
        return Err(Error::TooFewSamples);
    }
    let groups = groups(labels);
    if groups.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let rows = rows_of(points);
    let mut cluster_of = vec![0usize; n];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            cluster_of[i] = g;
        }
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; groups.len()];
    for i in 0..n {
        let own = cluster_of[i];
        if groups[own].len() == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[cluster_of[j]] += dist(&rows[i], &rows[j]);
            }
        }
        let a = sums[own] / (groups[own].len() - 1) as f64;
        let b = groups
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != own)
            .map(|(g, m)| sums[g] / m.len() as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Between-cluster dispersion over within-cluster dispersion, each divided by
/// its degrees of freedom. `+inf` when the within-cluster dispersion is zero.
pub fn calinski_harabasz(points: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_len(points, labels)?;
    let n = labels.len();
    let groups = groups(labels);
    let k = groups.len();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    if k >= n {
        return Err(Error::TooFewSamples);
    }
    let rows = rows_of(points);
    let all: Vec<usize> = (0..n).collect();
    let global = centroid(&rows, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for members in &groups {
        let c = centroid(&rows, members);
        between += members.len() as f64 * c.iter().zip(&global).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        within += members
            .iter()
            .map(|&i| rows[i].iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum::<f64>();
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Mean over clusters of the worst (S_i + S_j) / M_ij ratio. `+inf` when two
/// centroids coincide.
pub fn davies_bouldin(points: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_len(points, labels)?;
    let groups = groups(labels);
    let k = groups.len();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let rows = rows_of(points);
    let centroids: Vec<Vec<f64>> = groups.iter().map(|m| centroid(&rows, m)).collect();
    let scatter: Vec<f64> = groups
        .iter()
        .zip(&centroids)
        .map(|(m, c)| m.iter().map(|&i| dist(&rows[i], c)).sum::<f64>() / m.len() as f64)
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = dist(&centroids[i], &centroids[j]);
            if sep == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Majority label of a group of labels; ties go to the smallest label.
pub(crate) fn majority(labels: impl IntoIterator<Item = usize>) -> (usize, usize) {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut best = (usize::MAX, 0usize);
    for (label, count) in counts {
        // BTreeMap iterates ascending, so strict `>` keeps the smallest on ties
        if count > best.1 {
            best = (label, count);
        }
    }
    best
}

/// Indices of each subject's rows, subjects in order of first appearance.
pub(crate) fn subject_groups(subjects: &[String]) -> Vec<(&str, Vec<usize>)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(&str, Vec<usize>)> = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        let slot = *index.entry(s.as_str()).or_insert_with(|| {
            out.push((s.as_str(), Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(i);
    }
    out
}

/// Intra-subject consistency score in [0, 1]; 0 means every subject's samples
/// share one label.
pub fn ics(labels: &[usize], subjects: &[String]) -> Result<f64> {
    if labels.len() != subjects.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: subjects.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mismatches: usize = subject_groups(subjects)
        .iter()
        .map(|(_, rows)| rows.len() - majority(rows.iter().map(|&i| labels[i])).1)
        .sum();
    Ok(mismatches as f64 / labels.len() as f64)
}

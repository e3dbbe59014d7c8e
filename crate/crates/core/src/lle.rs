//! Locally linear embedding.
//!
//! Three steps: exact k-nearest-neighbor search, per-sample affine
//! reconstruction weights from the local Gram matrix, and the bottom
//! eigenvectors of `M = (I - W)^T (I - W)`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::SampleMatrix;
use crate::error::{Error, Result};
use crate::linalg::{rows_of, sq_dist, SymEigen};

/// Neighbor lists: `indices[i]` holds the `k` rows closest to row `i`,
/// nearest first, never containing `i` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    pub k: usize,
    pub indices: Vec<Vec<usize>>,
}

/// Sparse reconstruction weights; row `i` is nonzero only at its neighbors
/// and sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionWeights {
    pub n: usize,
    pub neighbors: Vec<Vec<usize>>,
    pub weights: Vec<Vec<f64>>,
}

impl ReconstructionWeights {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (i, (nb, ws)) in self.neighbors.iter().zip(&self.weights).enumerate() {
            for (&j, &v) in nb.iter().zip(ws) {
                w[(i, j)] += v;
            }
        }
        w
    }

    /// `(I - W)^T (I - W)`.
    pub fn cost_matrix(&self) -> DMatrix<f64> {
        let mut a = -self.to_dense();
        for i in 0..self.n {
            a[(i, i)] += 1.0;
        }
        a.transpose() * &a
    }
}

/// Reduced coordinates carrying the source row identities.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: DMatrix<f64>,
    pub sample_ids: Vec<String>,
    pub subject_ids: Vec<String>,
    /// Eigenvalues of `M` belonging to the returned coordinates.
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// CSV with header `sample_id,subject_id,e0,...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_string(), "subject_id".to_string()];
        header.extend((0..self.dim()).map(|j| format!("e{j}")));
        wtr.write_record(&header)?;
        for i in 0..self.rows() {
            let mut rec = vec![self.sample_ids[i].clone(), self.subject_ids[i].clone()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LleConfig {
    pub k_neighbors: usize,
    pub dim: usize,
    pub reg: f64,
}

impl Default for LleConfig {
    fn default() -> Self {
        LleConfig {
            k_neighbors: 30,
            dim: 30,
            reg: 1e-3,
        }
    }
}

/// Exact k-NN by full distance scan. Ties resolve to the smaller row index.
pub fn knn_graph(x: &DMatrix<f64>, k: usize) -> Result<NeighborGraph> {
    let n = x.nrows();
    if n < 2 || k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let rows = rows_of(x);
    let indices = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&rows[i], &rows[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborGraph { k, indices })
}

/// Solves, for each row, `min |x_i - sum_j w_j x_j|^2` subject to
/// `sum_j w_j = 1`, via `Z w = 1` on the local Gram matrix `Z`.
///
/// With `reg > 0` the Gram matrix is always regularized as
/// `Z + reg * trace(Z) * I` (or `Z + reg * I` when the trace is zero).
pub fn reconstruction_weights(x: &DMatrix<f64>, g: &NeighborGraph, reg: f64) -> Result<ReconstructionWeights> {
    let n = x.nrows();
    if g.indices.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: g.indices.len(),
        });
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidArgument(format!("reg must be >= 0, got {reg}")));
    }
    let rows = rows_of(x);
    let weights = g
        .indices
        .par_iter()
        .enumerate()
        .map(|(i, nb)| local_weights(&rows, i, nb, reg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReconstructionWeights {
        n,
        neighbors: g.indices.clone(),
        weights,
    })
}

fn local_weights(rows: &[Vec<f64>], i: usize, nb: &[usize], reg: f64) -> Result<Vec<f64>> {
    let k = nb.len();
    let f = rows[i].len();
    let diffs = DMatrix::from_fn(k, f, |a, c| rows[nb[a]][c] - rows[i][c]);
    let mut z = &diffs * diffs.transpose();
    if reg > 0.0 {
        let tr = z.trace();
        let r = if tr > 0.0 { reg * tr } else { reg };
        for a in 0..k {
            z[(a, a)] += r;
        }
    }
    let ones = DVector::from_element(k, 1.0);
    let w = z
        .lu()
        .solve(&ones)
        .filter(|w| w.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularLocalGram(i))?;
    let s = w.sum();
    if s == 0.0 || !s.is_finite() {
        return Err(Error::SingularLocalGram(i));
    }
    Ok(w.iter().map(|v| v / s).collect())
}

/// Bottom `d` non-constant eigenvectors of `M`, scaled by `sqrt(n)`.
///
/// The constant vector is an exact null vector of `M` because weight rows sum
/// to one. It is moved to the top of the spectrum by adding
/// `(trace(M) + 1) * 11^T / n` before decomposition, so the returned columns
/// are orthogonal to it (mean zero) even when the null space is degenerate,
/// as it is for a disconnected neighbor graph.
pub fn embed(w: &ReconstructionWeights, d: usize) -> Result<DMatrix<f64>> {
    let (values, _) = embed_with_spectrum(w, d)?;
    Ok(values)
}

pub(crate) fn embed_with_spectrum(w: &ReconstructionWeights, d: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = w.n;
    if d == 0 || d >= n {
        return Err(Error::KTooLarge { k: d, n });
    }
    let mut m = w.cost_matrix();
    let shift = (m.trace() + 1.0) / n as f64;
    m.add_scalar_mut(shift);
    let eig = SymEigen::new(m)?;
    let scale = (n as f64).sqrt();
    let values = eig.vectors.columns(0, d).scale(scale);
    let spectrum = eig.values.iter().take(d).copied().collect();
    Ok((values, spectrum))
}

/// Full embedding of a sample matrix.
pub fn lle(x: &SampleMatrix, cfg: &LleConfig) -> Result<Embedding> {
    if cfg.dim > x.cols() {
        return Err(Error::InvalidArgument(format!(
            "embedding dim {} exceeds feature count {}",
            cfg.dim,
            x.cols()
        )));
    }
    let g = knn_graph(x.values(), cfg.k_neighbors)?;
    let w = reconstruction_weights(x.values(), &g, cfg.reg)?;
    let (values, eigenvalues) = embed_with_spectrum(&w, cfg.dim)?;
    Ok(Embedding {
        values,
        sample_ids: x.sample_ids().to_vec(),
        subject_ids: x.subject_ids().to_vec(),
        eigenvalues,
    })
}

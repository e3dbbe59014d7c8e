//! Dense symmetric eigendecomposition with a reproducible output convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 100_000;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
///
/// Each eigenvector column is sign-canonicalized so that its first component
/// with magnitude above `1e-10` is positive.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure);
        }
        let n = m.nrows();
        let eig = SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenFailure)?;

        let mut order: Vec<usize> = (0..n).collect();
        // stable sort: equal eigenvalues keep solver order
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            canonicalize_sign(&mut col);
            vectors.set_column(dst, &col);
        }
        Ok(SymEigen { values, vectors })
    }
}

pub fn canonicalize_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-10) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Rows of a matrix copied out as contiguous slices.
pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

//! Small dense linear-algebra helpers for symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Reciprocal condition number below which a covariance is treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

pub fn matrix_from_flat(d: usize, flat: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, flat)
}

pub fn matrix_to_flat(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `|λ|_min / |λ|_max` of a symmetric matrix; zero for the zero matrix.
pub fn rcond_symmetric(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    rcond_of(eig.eigenvalues.as_slice())
}

fn rcond_of(eigenvalues: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &l in eigenvalues {
        lo = lo.min(l.abs());
        hi = hi.max(l.abs());
    }
    if hi == 0.0 || !hi.is_finite() {
        0.0
    } else {
        lo / hi
    }
}

/// Eigendecomposition of a symmetric positive-definite matrix, rejecting
/// near-singular or indefinite input.
fn spd_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(m.clone());
    let rcond = rcond_of(eig.eigenvalues.as_slice());
    if rcond < RCOND_THRESHOLD || eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::SingularCovariance { rcond });
    }
    Ok(eig)
}

fn spectral_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let q = &eig.eigenvectors;
    let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    q * diag * q.transpose()
}

/// Symmetric PSD square root `M^{1/2}`.
pub fn sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spectral_map(&spd_eigen(m)?, f64::sqrt))
}

/// Symmetric inverse square root `M^{-1/2}`.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spectral_map(&spd_eigen(m)?, |l| 1.0 / l.sqrt()))
}

pub fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rcond = rcond_symmetric(m);
    if rcond < RCOND_THRESHOLD {
        return Err(Error::SingularCovariance { rcond });
    }
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularCovariance { rcond })
}

/// Solves `M x = b` for symmetric positive-definite `M` via Cholesky.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let rcond = rcond_symmetric(m);
    if rcond < RCOND_THRESHOLD {
        return Err(Error::SingularCovariance { rcond });
    }
    m.clone()
        .cholesky()
        .map(|c| c.solve(b))
        .ok_or(Error::SingularCovariance { rcond })
}

/// Moore-Penrose pseudo-inverse of a general matrix.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// `sigma_min / sigma_max` of a general square matrix.
pub fn rcond_general(m: &DMatrix<f64>) -> f64 {
    rcond_of(m.clone().svd(false, false).singular_values.as_slice())
}

/// Inverse of a general square matrix, rejecting near-singular input.
pub fn inverse_general(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rcond = rcond_general(m);
    if rcond < RCOND_THRESHOLD {
        return Err(Error::SingularCovariance { rcond });
    }
    m.clone().try_inverse().ok_or(Error::SingularCovariance { rcond })
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    m.clone().svd(false, false).rank(1e-10)
}

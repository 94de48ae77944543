//! Dense helpers shared by the solver modules.
//!
//! All matrices are `nalgebra::DMatrix<f64>`; column stacking follows the
//! column-major storage order, so `vec(X)` is a copy of the storage slice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest dimension accepted by the Kronecker-form Stein solver.
pub const STEIN_LIMIT: usize = 200;

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column-stacked copy of `m`.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_sym_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Ratio of extreme singular values; infinite for an exactly rank-deficient matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    a.clone().lu().solve(b).ok_or(Error::Singular(what))
}

/// Solves the Stein equation `X = A X A' + C` through `(I - A⊗A) vec X = vec C`.
pub fn solve_stein(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n > STEIN_LIMIT {
        return Err(Error::TooLarge { size: n, limit: STEIN_LIMIT });
    }
    let system = DMatrix::<f64>::identity(n * n, n * n) - kron(a, a);
    let rhs = vec(c);
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Stein equation"))?;
    Ok(unvec(&x, n, n))
}

/// Symmetric square root; eigenvalues in `[-clip, 0)` are clipped to zero.
pub fn sym_sqrt(m: &DMatrix<f64>, clip: f64) -> Result<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -clip {
            return Err(Error::NotPsd { min_eig: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Symmetric inverse square root of a positive definite matrix.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v <= 0.0 {
            return Err(Error::NotPsd { min_eig: *v });
        }
        *v = 1.0 / v.sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&vals) * q.transpose())
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn block(m: &DMatrix<f64>, row: usize, col: usize, size: usize) -> DMatrix<f64> {
    m.view((row * size, col * size), (size, size)).into_owned()
}

pub fn set_block(m: &mut DMatrix<f64>, row: usize, col: usize, b: &DMatrix<f64>) {
    let (r, c) = b.shape();
    m.view_mut((row * r, col * c), (r, c)).copy_from(b);
}

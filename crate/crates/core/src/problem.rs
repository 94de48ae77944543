//! Interpolation data and the structured matrices derived from it.
//!
//! The value matrix `W` is block diagonal over nodes; the block of node `j`
//! is lower-triangular block Toeplitz in the Taylor data `W_j0, W_j1, ...`.
//! Row and column indices follow `Z ⊗ I_ℓ`: scalar position times `ℓ` plus
//! the channel.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, condition_number, max_abs};

/// Largest supported `n + 1`.
pub const MAX_SIZE: usize = linalg::STEIN_LIMIT;

const W00_TOL: f64 = 1e-12;
const S_RESIDUAL_TOL: f64 = 1e-12;
const PICK_RELATIVE_FLOOR: f64 = 1e-10;
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationProblem {
    ell: usize,
    nodes: Vec<f64>,
    multiplicities: Vec<usize>,
    /// `values[j][k]` is `F^(k)(z_j) / k!`.
    values: Vec<Vec<DMatrix<f64>>>,
}

impl InterpolationProblem {
    pub fn new(
        ell: usize,
        nodes: Vec<f64>,
        multiplicities: Vec<usize>,
        values: Vec<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if ell == 0 {
            return bad("ell must be positive".into());
        }
        if nodes.is_empty() {
            return bad("at least one node is required".into());
        }
        if nodes.len() != multiplicities.len() || nodes.len() != values.len() {
            return bad(format!(
                "{} nodes, {} multiplicities and {} value lists",
                nodes.len(),
                multiplicities.len(),
                values.len()
            ));
        }
        if nodes[0] != 0.0 {
            return bad(format!("first node must be exactly 0, got {}", nodes[0]));
        }
        for (j, &z) in nodes.iter().enumerate() {
            if !z.is_finite() || z.abs() >= 1.0 {
                return bad(format!("node {j} = {z} is not inside the open unit disc"));
            }
            for (i, &w) in nodes.iter().enumerate().take(j) {
                if (z - w).abs() <= 1e-12 {
                    return bad(format!("nodes {i} and {j} coincide"));
                }
            }
        }
        for (j, (&m, vals)) in multiplicities.iter().zip(&values).enumerate() {
            if m == 0 {
                return bad(format!("multiplicity of node {j} is zero"));
            }
            if vals.len() != m {
                return bad(format!("node {j} has multiplicity {m} but {} values", vals.len()));
            }
            for (k, v) in vals.iter().enumerate() {
                if v.shape() != (ell, ell) {
                    return Err(Error::DimensionMismatch(format!(
                        "value W[{j}][{k}] is {}x{}, expected {ell}x{ell}",
                        v.nrows(),
                        v.ncols()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return bad(format!("value W[{j}][{k}] has non-finite entries"));
                }
            }
        }
        let half = DMatrix::<f64>::identity(ell, ell) * 0.5;
        let dev = max_abs(&(&values[0][0] - &half));
        if dev > W00_TOL {
            return bad(format!("W[0][0] must equal I/2 (deviation {dev:.3e})"));
        }
        let size: usize = multiplicities.iter().sum();
        if size > MAX_SIZE {
            return Err(Error::TooLarge { size, limit: MAX_SIZE });
        }
        Ok(Self { ell, nodes, multiplicities, values })
    }

    /// Problem whose data is that of the constant function `F ≡ I/2`.
    pub fn constant_half(ell: usize, nodes: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        let values = multiplicities
            .iter()
            .map(|&m| {
                (0..m)
                    .map(|k| {
                        if k == 0 {
                            DMatrix::identity(ell, ell) * 0.5
                        } else {
                            DMatrix::zeros(ell, ell)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(ell, nodes, multiplicities, values)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn values(&self) -> &[Vec<DMatrix<f64>>] {
        &self.values
    }

    /// `n` with `n + 1 = Σ n_j`; the interpolant has McMillan degree at most `ℓ n`.
    pub fn n(&self) -> usize {
        self.size() - 1
    }

    /// `n + 1`, the dimension of `Z`.
    pub fn size(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Offset of each node's block inside `Z`.
    pub fn offsets(&self) -> Vec<usize> {
        self.multiplicities
            .iter()
            .scan(0, |acc, &m| {
                let at = *acc;
                *acc += m;
                Some(at)
            })
            .collect()
    }

    pub fn build_z(&self) -> DMatrix<f64> {
        let size = self.size();
        let mut z = DMatrix::zeros(size, size);
        for ((&node, &m), off) in self.nodes.iter().zip(&self.multiplicities).zip(self.offsets()) {
            for i in 0..m {
                z[(off + i, off + i)] = node;
                if i > 0 {
                    z[(off + i, off + i - 1)] = 1.0;
                }
            }
        }
        z
    }

    pub fn build_e(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.size());
        for off in self.offsets() {
            e[off] = 1.0;
        }
        e
    }

    /// The block-diagonal, block-Toeplitz value matrix `W`.
    pub fn value_matrix(&self) -> DMatrix<f64> {
        let l = self.ell;
        let dim = l * self.size();
        let mut w = DMatrix::zeros(dim, dim);
        for (vals, off) in self.values.iter().zip(self.offsets()) {
            let m = vals.len();
            for r in 0..m {
                for c in 0..=r {
                    linalg::set_block(&mut w, off + r, off + c, &vals[r - c]);
                }
            }
        }
        w
    }

    pub fn derive(&self) -> Result<DerivedProblemMatrices> {
        let z = self.build_z();
        let e = self.build_e();
        let s = solve_s(&z, &e)?;
        let w = self.value_matrix();
        let (t, that) = build_t_that(&w, &e, self.ell)?;
        Ok(DerivedProblemMatrices { z, w, e, s, t, that })
    }
}

#[derive(Debug, Clone)]
pub struct DerivedProblemMatrices {
    pub z: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub e: DVector<f64>,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub that: DMatrix<f64>,
}

/// Solves `S = Z S Z' + e e'`.
pub fn solve_s(z: &DMatrix<f64>, e: &DVector<f64>) -> Result<DMatrix<f64>> {
    let ee = e * e.transpose();
    let s = linalg::symmetrize(&linalg::solve_stein(z, &ee)?);
    let residual = max_abs(&(&s - z * &s * z.transpose() - &ee));
    if !residual.is_finite() || residual > S_RESIDUAL_TOL * max_abs(&s).max(1.0) {
        return Err(Error::NonConvergent { residual });
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickCheck {
    pub feasible: bool,
    pub min_eig: f64,
}

/// Pick matrix `W (S⊗I) + (S⊗I) W'`.
pub fn pick_matrix(w: &DMatrix<f64>, s: &DMatrix<f64>, ell: usize) -> DMatrix<f64> {
    let e = linalg::kron(s, &DMatrix::identity(ell, ell));
    w * &e + &e * w.transpose()
}

pub fn pick_check(w: &DMatrix<f64>, s: &DMatrix<f64>, ell: usize) -> PickCheck {
    let pick = pick_matrix(w, s, ell);
    let min_eig = linalg::min_sym_eig(&pick);
    let floor = PICK_RELATIVE_FLOOR * max_abs(&pick);
    PickCheck { feasible: min_eig > floor, min_eig }
}

/// `T = (W - I/2)(W + I/2)^{-1}` and `T̂ = T (e ⊗ I_ℓ)`.
pub fn build_t_that(
    w: &DMatrix<f64>,
    e: &DVector<f64>,
    ell: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let dim = w.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let plus = w + &id * 0.5;
    let minus = w - &id * 0.5;
    let condition = condition_number(&plus);
    if condition > CONDITION_LIMIT {
        return Err(Error::SingularNormalization { condition });
    }
    // T (W + I/2) = W - I/2, solved in transposed form.
    let t = linalg::solve(&plus.transpose(), &minus.transpose(), "W + I/2")?.transpose();
    let e_kron = linalg::kron(&DMatrix::from_column_slice(e.len(), 1, e.as_slice()), &DMatrix::identity(ell, ell));
    let that = &t * e_kron;
    Ok((t, that))
}

/// Value matrix along the homotopy, `W(λ) = (I - λT)^{-1} - I/2`.
pub fn deform_w(t: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidProblem(format!("lambda {lambda} outside [0, 1]")));
    }
    let dim = t.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let m = &id - t * lambda;
    if condition_number(&m) > CONDITION_LIMIT {
        return Err(Error::PathSingular { lambda });
    }
    let inv = linalg::inverse(&m, "I - lambda T").map_err(|_| Error::PathSingular { lambda })?;
    Ok(inv - id * 0.5)
}

//! Independent certification of solver output.

mod oracle;

pub use oracle::{roundtrip_oracle, roundtrip_oracle_with, taylor_data, truth_from, GroundTruth, NodePlan, OracleOptions, RoundTrip};

use std::fmt;

use nalgebra::DMatrix;

use crate::cee::CeeSolution;
use crate::error::{Error, Result};
use crate::linalg::{self, condition_number, max_abs};
use crate::matpoly::{positive_real_check, spectral_identity_residual, MatrixPolynomial};
use crate::problem::InterpolationProblem;
use crate::structure::{build_canonical, interpolation_operators, StructureSpec};

pub const INTERPOLATION_TOL: f64 = 1e-8;
pub const SPECTRAL_TOL: f64 = 1e-8;
pub const PR_TOL: f64 = -1e-10;
const BASIS_CONDITION_LIMIT: f64 = 1e12;

/// Taylor coefficients `F^(k)(z)/k!`, `k < count`, of `F(z) = ½I + zH(I - zF)^{-1}G`.
fn taylor_coefficients(a: &MatrixPolynomial, b: &MatrixPolynomial, z: f64, count: usize) -> Result<Vec<DMatrix<f64>>> {
    let spec = a.spec();
    let ell = spec.ell();
    let dim = spec.state_dim();
    let h = build_canonical(spec).h;
    let f = a.companion();
    let g = (b.coeff() - a.coeff()) * 0.5;
    let x = linalg::inverse(&(DMatrix::identity(dim, dim) - &f * z), "I - zF")?;
    let fx = &f * &x;
    let mut out = Vec::with_capacity(count);
    // power = X (FX)^(k-1)
    let mut power = x.clone();
    for k in 0..count {
        let c = if k == 0 {
            &x * z
        } else {
            let next = &power * &fx;
            let c = &next * z + &power;
            power = next;
            c
        };
        let mut w = &h * c * &g;
        if k == 0 {
            w += DMatrix::<f64>::identity(ell, ell) * 0.5;
        }
        out.push(w);
    }
    Ok(out)
}

fn check_pair(a: &MatrixPolynomial, b: &MatrixPolynomial, problem: &InterpolationProblem) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(Error::DimensionMismatch("A and B have different structure".into()));
    }
    if a.spec().ell() != problem.ell() {
        return Err(Error::DimensionMismatch("polynomial and problem dimensions differ".into()));
    }
    Ok(())
}

fn raw_interpolation_residual(a: &MatrixPolynomial, b: &MatrixPolynomial, problem: &InterpolationProblem) -> Result<f64> {
    check_pair(a, b, problem)?;
    let mut worst = 0.0_f64;
    for ((&z, &m), vals) in problem.nodes().iter().zip(problem.multiplicities()).zip(problem.values()) {
        for (c, w) in taylor_coefficients(a, b, z, m)?.iter().zip(vals) {
            worst = worst.max(max_abs(&(c - w)));
        }
    }
    Ok(worst)
}

/// Largest deviation `‖F^(k)(z_j)/k! - W_jk‖` over all interpolation conditions.
pub fn interpolation_residual(a: &MatrixPolynomial, b: &MatrixPolynomial, problem: &InterpolationProblem) -> Result<f64> {
    if !a.is_schur().stable {
        return Err(Error::UnstableA);
    }
    raw_interpolation_residual(a, b, problem)
}

/// The same residual computed as `‖½ A_*(Z⊗I)^{-1} B_*(Z⊗I) - W‖`.
pub fn interpolation_residual_kron(a: &MatrixPolynomial, b: &MatrixPolynomial, problem: &InterpolationProblem) -> Result<f64> {
    check_pair(a, b, problem)?;
    let z = problem.build_z();
    let eval = |blocks: Vec<DMatrix<f64>>| {
        let mut zk = DMatrix::<f64>::identity(z.nrows(), z.ncols());
        let mut acc = DMatrix::zeros(z.nrows() * problem.ell(), z.ncols() * problem.ell());
        for blk in blocks {
            acc += linalg::kron(&zk, &blk);
            zk = &z * zk;
        }
        acc
    };
    let a_star = eval(a.blocks());
    let b_star = eval(b.blocks());
    let f = linalg::solve(&a_star, &b_star, "A_*(Z⊗I)")? * 0.5;
    Ok(max_abs(&(f - problem.value_matrix())))
}

fn scalar_u_from_m(problem: &InterpolationProblem) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if problem.ell() != 1 {
        return Err(Error::DimensionMismatch(format!("scalar check needs ell = 1, got {}", problem.ell())));
    }
    let d = problem.derive()?;
    let size = problem.size();
    let mut basis = DMatrix::zeros(size, size);
    let mut col = d.e.clone();
    for k in 0..size {
        basis.set_column(k, &col);
        col = &d.z * col;
    }
    if !(condition_number(&basis) <= BASIS_CONDITION_LIMIT) {
        return Err(Error::SingularBasis);
    }
    let id = DMatrix::<f64>::identity(size, size);
    let inner = linalg::solve(&(&d.w + &id * 0.5), &(&d.w - &id * 0.5), "W + I/2")?;
    let m = linalg::solve(&basis, &(inner * &basis), "[e V]").map_err(|_| Error::SingularBasis)?;
    let lower = m.rows(1, size - 1);
    Ok((lower.columns(0, 1).into_owned(), lower.columns(1, size - 1).into_owned()))
}

/// Compares `u`, `U` from the scalar `M`-matrix route with the general construction.
pub fn scalar_uu_crosscheck(problem: &InterpolationProblem) -> Result<f64> {
    let (u_s, umat_s) = scalar_u_from_m(problem)?;
    let spec = StructureSpec::uniform(1, problem.n())?;
    let canonical = build_canonical(&spec);
    let d = problem.derive()?;
    let ops = interpolation_operators(&d.z, &d.e, &d.that, &spec, &canonical)?;
    Ok(max_abs(&(u_s - &ops.u)).max(max_abs(&(umat_s - &ops.umat))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRecovery {
    /// Largest deviation of `(a, b)` from the matrix-path coefficients.
    pub deviation: f64,
    /// `hPh'`, which must stay below one.
    pub hph: f64,
}

/// Recomputes `a = (I - U)(ΓPh' + σ) - u` and `b = (I + U)(ΓPh' + σ) + u` at `ℓ = 1`.
pub fn scalar_recovery_crosscheck(solution: &CeeSolution, problem: &InterpolationProblem) -> Result<ScalarRecovery> {
    let (u, umat) = scalar_u_from_m(problem)?;
    let spec = solution.sigma.spec();
    if spec.ell() != 1 || spec.n() != problem.n() {
        return Err(Error::DimensionMismatch("solution does not match the scalar problem".into()));
    }
    let canonical = build_canonical(spec);
    let gamma = canonical.gamma(solution.sigma.coeff());
    let h = &canonical.h;
    let q = &gamma * &solution.p_matrix * h.transpose() + solution.sigma.coeff();
    let uq = &umat * &q;
    let a = &q - &uq - &u;
    let b = &q + &uq + &u;
    let deviation = max_abs(&(a - solution.a.coeff())).max(max_abs(&(b - solution.b.coeff())));
    let hph = (h * &solution.p_matrix * h.transpose())[(0, 0)];
    Ok(ScalarRecovery { deviation, hph })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub interp_residual: f64,
    pub spectral_residual: f64,
    pub pr_min_eig: f64,
    pub stable_a: bool,
    pub rank_p: usize,
    pub pass: bool,
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "interp_residual: {:.6e}", self.interp_residual)?;
        writeln!(f, "spectral_residual: {:.6e}", self.spectral_residual)?;
        writeln!(f, "pr_min_eig: {:.6e}", self.pr_min_eig)?;
        writeln!(f, "stable_A: {}", self.stable_a)?;
        writeln!(f, "rank_P: {}", self.rank_p)?;
        write!(f, "pass: {}", self.pass)
    }
}

/// Checks every defining property of the interpolant against the problem data.
pub fn certify(solution: &CeeSolution, problem: &InterpolationProblem, grid: usize) -> Result<CertificationReport> {
    let stable_a = solution.a.is_schur().stable;
    let interp_residual = raw_interpolation_residual(&solution.a, &solution.b, problem).unwrap_or(f64::INFINITY);
    let spectral_residual = spectral_identity_residual(&solution.a, &solution.b, &solution.sigma, &solution.r, grid);
    let pr_min_eig = if stable_a {
        positive_real_check(&solution.a, &solution.b, grid).map(|p| p.min_eig).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    let pass = stable_a
        && interp_residual <= INTERPOLATION_TOL
        && spectral_residual <= SPECTRAL_TOL
        && pr_min_eig >= PR_TOL;
    Ok(CertificationReport { interp_residual, spectral_residual, pr_min_eig, stable_a, rank_p: solution.rank_p, pass })
}

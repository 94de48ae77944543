//! Matrix polynomials `A(z) = D(z) + Π(z) A` in observer canonical form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs_c, CMatrix};
use crate::structure::{build_canonical, StructureSpec};

const SCHUR_MARGIN: f64 = 1e-12;
const PR_TOL: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyRole {
    A,
    B,
    Sigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    spec: StructureSpec,
    coeff: DMatrix<f64>,
    role: PolyRole,
}

impl MatrixPolynomial {
    pub fn new(spec: StructureSpec, coeff: DMatrix<f64>, role: PolyRole) -> Result<Self> {
        let shape = (spec.state_dim(), spec.ell());
        if coeff.shape() != shape {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix is {}x{}, expected {}x{}",
                coeff.nrows(),
                coeff.ncols(),
                shape.0,
                shape.1
            )));
        }
        if coeff.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidStructure("non-finite polynomial coefficient".into()));
        }
        Ok(Self { spec, coeff, role })
    }

    /// The monomial `D(z)` (zero coefficient matrix).
    pub fn monomial(spec: StructureSpec, role: PolyRole) -> Self {
        let coeff = DMatrix::zeros(spec.state_dim(), spec.ell());
        Self { spec, coeff, role }
    }

    pub fn spec(&self) -> &StructureSpec {
        &self.spec
    }

    pub fn coeff(&self) -> &DMatrix<f64> {
        &self.coeff
    }

    pub fn role(&self) -> PolyRole {
        self.role
    }

    pub fn with_role(mut self, role: PolyRole) -> Self {
        self.role = role;
        self
    }

    /// Coefficients of the reversed polynomial: `[I, N_1 A, ..., N_t A]`.
    pub fn blocks(&self) -> Vec<DMatrix<f64>> {
        let ell = self.spec.ell();
        let mut out = vec![DMatrix::identity(ell, ell)];
        out.extend(build_canonical(&self.spec).coefficient_blocks(&self.coeff));
        out
    }

    /// `Π(z)`, the `ℓ × nℓ` matrix of monomials `z^{t_i - 1}, ..., 1`.
    pub fn pi(&self, z: Complex64) -> CMatrix {
        let ell = self.spec.ell();
        let mut pi = CMatrix::zeros(ell, self.spec.state_dim());
        for (i, (&t, off)) in self.spec.indices().iter().zip(self.spec.offsets()).enumerate() {
            for r in 0..t {
                pi[(i, off + r)] = z.powu((t - 1 - r) as u32);
            }
        }
        pi
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut out = self.pi(z) * linalg::to_complex(&self.coeff);
        for (i, &t) in self.spec.indices().iter().enumerate() {
            out[(i, i)] += z.powu(t as u32);
        }
        out
    }

    /// `A_*(z) = D(z) A(1/z)`.
    pub fn reverse(&self) -> ReversedPolynomial {
        ReversedPolynomial { blocks: self.blocks() }
    }

    /// Companion-form matrix `J - A H`.
    pub fn companion(&self) -> DMatrix<f64> {
        let c = build_canonical(&self.spec);
        &c.j - &self.coeff * &c.h
    }

    pub fn is_schur(&self) -> SchurTest {
        let eigenvalues: Vec<Complex64> = self.companion().complex_eigenvalues().iter().copied().collect();
        let stable = eigenvalues.iter().all(|l| l.norm() < 1.0 - SCHUR_MARGIN);
        SchurTest { stable, eigenvalues }
    }
}

#[derive(Debug, Clone)]
pub struct ReversedPolynomial {
    blocks: Vec<DMatrix<f64>>,
}

impl ReversedPolynomial {
    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.blocks[0].nrows(), self.blocks[0].ncols());
        for b in self.blocks.iter().rev() {
            acc = acc * z + linalg::to_complex(b);
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct SchurTest {
    pub stable: bool,
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveReal {
    pub ok: bool,
    pub min_eig: f64,
}

pub fn unit_circle(grid: usize) -> impl Iterator<Item = Complex64> {
    (0..grid).map(move |k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / grid as f64))
}

/// Smallest eigenvalue of `Φ₊ + Φ₊^H` on the unit circle, `Φ₊ = ½ A^{-1} B`.
pub fn positive_real_check(a: &MatrixPolynomial, b: &MatrixPolynomial, grid: usize) -> Result<PositiveReal> {
    if !a.is_schur().stable {
        return Err(Error::UnstableA);
    }
    let min_eig = hermitian_min_eig(a, |z| b.eval(z), grid)?;
    Ok(PositiveReal { ok: min_eig >= PR_TOL, min_eig })
}

fn hermitian_min_eig(a: &MatrixPolynomial, b: impl Fn(Complex64) -> CMatrix, grid: usize) -> Result<f64> {
    let mut min_eig = f64::INFINITY;
    for z in unit_circle(grid.max(1)) {
        let phi = a.eval(z).lu().solve(&b(z)).ok_or(Error::Singular("A(z) on the unit circle"))? * Complex64::new(0.5, 0.0);
        let herm = &phi + phi.adjoint();
        let ev = herm.symmetric_eigenvalues();
        min_eig = ev.iter().copied().fold(min_eig, f64::min);
    }
    Ok(min_eig)
}

/// Block upper-triangular Toeplitz `S(A)` and the stack `M(A) = [I; A_1'; ...; A_n']`.
pub fn build_s_m(poly: &MatrixPolynomial) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !poly.spec().is_uniform() {
        return Err(Error::UnequalIndices);
    }
    let ell = poly.spec().ell();
    let n = poly.spec().n();
    let blocks = poly.blocks();
    let dim = (n + 1) * ell;
    let mut s = DMatrix::zeros(dim, dim);
    let mut m = DMatrix::zeros(dim, ell);
    for r in 0..=n {
        for c in r..=n {
            linalg::set_block(&mut s, r, c, &blocks[c - r]);
        }
        m.view_mut((r * ell, 0), (ell, ell)).copy_from(&blocks[r].transpose());
    }
    Ok((s, m))
}

/// Worst relative mismatch of `A(z)B(1/z)' + B(z)A(1/z)' = 2Σ(z)RR'Σ(1/z)'` on the unit circle.
pub fn spectral_identity_residual(
    a: &MatrixPolynomial,
    b: &MatrixPolynomial,
    sigma: &MatrixPolynomial,
    r: &DMatrix<f64>,
    grid: usize,
) -> f64 {
    let rr = linalg::to_complex(&(r * r.transpose()));
    let two = Complex64::new(2.0, 0.0);
    let mut worst = 0.0_f64;
    for z in unit_circle(grid.max(1)) {
        let zi = z.inv();
        let lhs = a.eval(z) * b.eval(zi).transpose() + b.eval(z) * a.eval(zi).transpose();
        let rhs = sigma.eval(z) * &rr * sigma.eval(zi).transpose() * two;
        let res = max_abs_c(&(lhs - &rhs)) / (1.0 + max_abs_c(&rhs));
        worst = worst.max(res);
    }
    worst
}

/// `V(z) = A(z)^{-1} Σ(z) R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactor {
    pub a: MatrixPolynomial,
    pub sigma: MatrixPolynomial,
    pub r: DMatrix<f64>,
}

/// State-space form `x⁺ = F x + K w`, `y = H x + R w`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub f: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl SpectralFactor {
    pub fn new(a: MatrixPolynomial, sigma: MatrixPolynomial, r: DMatrix<f64>) -> Result<Self> {
        if a.spec() != sigma.spec() {
            return Err(Error::DimensionMismatch("A and Sigma have different structure".into()));
        }
        let ell = a.spec().ell();
        if r.shape() != (ell, ell) {
            return Err(Error::DimensionMismatch(format!("R must be {ell}x{ell}")));
        }
        Ok(Self { a, sigma, r })
    }

    pub fn ell(&self) -> usize {
        self.a.spec().ell()
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let rhs = self.sigma.eval(z) * linalg::to_complex(&self.r);
        self.a.eval(z).lu().solve(&rhs).unwrap_or_else(|| CMatrix::from_element(rhs.nrows(), rhs.ncols(), Complex64::new(f64::NAN, f64::NAN)))
    }

    pub fn is_stable(&self) -> bool {
        self.a.is_schur().stable
    }

    /// From `A(z)^{-1}Σ(z) = I + H(zI - F)^{-1}(Σ - A)`.
    pub fn realization(&self) -> Realization {
        let c = build_canonical(self.a.spec());
        let f = self.a.companion();
        let k = (self.sigma.coeff() - self.a.coeff()) * &self.r;
        Realization { f, k, h: c.h, r: self.r.clone() }
    }
}

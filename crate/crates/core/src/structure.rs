//! Observer canonical form and the linear interpolation operators.
//!
//! For observability indices `t_1..t_ℓ` the state has dimension `nℓ`, split
//! into `ℓ` blocks of sizes `t_i`. `J` shifts inside each block, `H` picks the
//! first entry of each block and `N_k` picks entry `k` (1-based) of each block
//! whose size is at least `k`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, condition_number, max_abs};

const L_CONDITION_LIMIT: f64 = 1e12;
const TOP_BLOCK_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureSpec {
    ell: usize,
    n: usize,
    indices: Vec<usize>,
}

impl StructureSpec {
    pub fn new(ell: usize, n: usize, indices: Vec<usize>) -> Result<Self> {
        if ell == 0 || n == 0 {
            return Err(Error::InvalidStructure(format!("ell = {ell} and n = {n} must be positive")));
        }
        if indices.len() != ell {
            return Err(Error::InvalidStructure(format!(
                "{} observability indices given for ell = {ell}",
                indices.len()
            )));
        }
        if indices.contains(&0) {
            return Err(Error::InvalidStructure("observability indices must be positive".into()));
        }
        let sum: usize = indices.iter().sum();
        if sum != n * ell {
            return Err(Error::InvalidStructure(format!(
                "observability indices sum to {sum}, expected n*ell = {}",
                n * ell
            )));
        }
        Ok(Self { ell, n, indices })
    }

    /// All indices equal to `n`.
    pub fn uniform(ell: usize, n: usize) -> Result<Self> {
        Self::new(ell, n, vec![n; ell])
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn max_index(&self) -> usize {
        self.indices.iter().copied().max().unwrap_or(0)
    }

    /// State dimension `nℓ`.
    pub fn state_dim(&self) -> usize {
        self.n * self.ell
    }

    pub fn is_uniform(&self) -> bool {
        self.indices.iter().all(|&t| t == self.n)
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.indices
            .iter()
            .scan(0, |acc, &t| {
                let at = *acc;
                *acc += t;
                Some(at)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalMatrices {
    pub j: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// `N_1 .. N_t`, each `ℓ × nℓ`.
    pub selectors: Vec<DMatrix<f64>>,
    /// `[N_1; ...; N_t]`.
    pub n_stack: DMatrix<f64>,
}

impl CanonicalMatrices {
    /// `Γ = J - Σ H` for a prior coefficient matrix `Σ`.
    pub fn gamma(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        &self.j - sigma * &self.h
    }

    /// Reversed coefficients `N_k X`, `k = 1..t`.
    pub fn coefficient_blocks(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.selectors.iter().map(|nk| nk * x).collect()
    }
}

pub fn build_canonical(spec: &StructureSpec) -> CanonicalMatrices {
    let ell = spec.ell();
    let dim = spec.state_dim();
    let t = spec.max_index();
    let mut j = DMatrix::zeros(dim, dim);
    let mut h = DMatrix::zeros(ell, dim);
    let mut selectors = vec![DMatrix::zeros(ell, dim); t];
    for (i, (&ti, off)) in spec.indices().iter().zip(spec.offsets()).enumerate() {
        for r in 0..ti.saturating_sub(1) {
            j[(off + r, off + r + 1)] = 1.0;
        }
        h[(i, off)] = 1.0;
        for (k, nk) in selectors.iter_mut().enumerate().take(ti) {
            nk[(i, off + k)] = 1.0;
        }
    }
    let mut n_stack = DMatrix::zeros(ell * t, dim);
    for (k, nk) in selectors.iter().enumerate() {
        n_stack.view_mut((k * ell, 0), (ell, dim)).copy_from(nk);
    }
    CanonicalMatrices { j, h, selectors, n_stack }
}

/// `V = [(Z e) ⊗ I_ℓ, ..., (Z^t e) ⊗ I_ℓ]`.
pub fn build_v(z: &DMatrix<f64>, e: &DVector<f64>, spec: &StructureSpec) -> DMatrix<f64> {
    let ell = spec.ell();
    let t = spec.max_index();
    let size = z.nrows();
    let id = DMatrix::<f64>::identity(ell, ell);
    let mut v = DMatrix::zeros(ell * size, ell * t);
    let mut zk = e.clone();
    for k in 0..t {
        zk = z * zk;
        let col = DMatrix::from_column_slice(size, 1, zk.as_slice());
        v.view_mut((0, k * ell), (ell * size, ell)).copy_from(&linalg::kron(&col, &id));
    }
    v
}

#[derive(Debug, Clone)]
pub struct LBlock {
    pub l: DMatrix<f64>,
    pub condition: f64,
}

/// Splits `VN = [0; L]` and checks that `L` is usable.
pub fn build_l(v: &DMatrix<f64>, n_stack: &DMatrix<f64>, spec: &StructureSpec) -> Result<LBlock> {
    let ell = spec.ell();
    let vn = v * n_stack;
    if vn.nrows() != vn.ncols() + ell {
        return Err(Error::DimensionMismatch(format!(
            "VN is {}x{}; the problem size must equal n + 1 = {}",
            vn.nrows(),
            vn.ncols(),
            spec.n() + 1
        )));
    }
    let top = vn.rows(0, ell).into_owned();
    if max_abs(&top) > TOP_BLOCK_TOL {
        return Err(Error::InvalidStructure("top block of VN is not zero; first node must be 0".into()));
    }
    let l = vn.rows(ell, vn.nrows() - ell).into_owned();
    let condition = condition_number(&l);
    if !(condition <= L_CONDITION_LIMIT) {
        return Err(Error::SingularL { condition, unequal_indices: !spec.is_uniform() });
    }
    Ok(LBlock { l, condition })
}

/// `u = (VN)† T̂` and the dense matrix of `U: Q ↦ (VN)† (Σ_k Z^k ⊗ N_k Q) T̂`.
#[derive(Debug, Clone)]
pub struct InterpolationOperators {
    pub v: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub l_inv: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Acts on column-stacked `nℓ × ℓ` arguments.
    pub umat: DMatrix<f64>,
    z: DMatrix<f64>,
    that: DMatrix<f64>,
    ell: usize,
}

impl InterpolationOperators {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn state_dim(&self) -> usize {
        self.l.nrows()
    }

    /// `U(Q)` through the stored matrix.
    pub fn apply_u(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let out = &self.umat * linalg::vec(q);
        linalg::unvec(&out, self.state_dim(), self.ell)
    }

    /// `U(Q)` evaluated from its definition.
    pub fn apply_u_definition(&self, q: &DMatrix<f64>, canonical: &CanonicalMatrices) -> DMatrix<f64> {
        let dim = self.z.nrows() * self.ell;
        let mut acc = DMatrix::zeros(dim, dim);
        let mut zk = DMatrix::<f64>::identity(self.z.nrows(), self.z.nrows());
        for nk in &canonical.selectors {
            zk = &self.z * zk;
            acc += linalg::kron(&zk, &(nk * q));
        }
        self.apply_pinv(&(acc * &self.that))
    }

    /// `(VN)† X = L^{-1} X_lower`; the top `ℓ` rows of `X` are discarded.
    pub fn apply_pinv(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let lower = x.rows(self.ell, x.nrows() - self.ell);
        &self.l_inv * lower
    }

    /// `(VN)† = [0 | L^{-1}]` as a dense matrix.
    pub fn pseudo_inverse(&self) -> DMatrix<f64> {
        let dim = self.state_dim();
        let mut p = DMatrix::zeros(dim, dim + self.ell);
        p.view_mut((0, self.ell), (dim, dim)).copy_from(&self.l_inv);
        p
    }
}

pub fn build_u_u(
    lblock: &LBlock,
    v: &DMatrix<f64>,
    z: &DMatrix<f64>,
    canonical: &CanonicalMatrices,
    that: &DMatrix<f64>,
    spec: &StructureSpec,
) -> Result<InterpolationOperators> {
    let ell = spec.ell();
    let dim = spec.state_dim();
    let l_inv = linalg::inverse(&lblock.l, "L")
        .map_err(|_| Error::SingularL { condition: f64::INFINITY, unequal_indices: !spec.is_uniform() })?;
    let mut ops = InterpolationOperators {
        v: v.clone(),
        l: lblock.l.clone(),
        l_inv,
        u: DMatrix::zeros(dim, ell),
        umat: DMatrix::zeros(dim * ell, dim * ell),
        z: z.clone(),
        that: that.clone(),
        ell,
    };
    ops.u = ops.apply_pinv(that);
    for col in 0..dim * ell {
        let mut basis = DMatrix::zeros(dim, ell);
        basis[(col % dim, col / dim)] = 1.0;
        let image = ops.apply_u_definition(&basis, canonical);
        ops.umat.set_column(col, &linalg::vec(&image));
    }
    Ok(ops)
}

/// Runs the full chain `V → L → (u, U)` for derived problem data.
pub fn interpolation_operators(
    z: &DMatrix<f64>,
    e: &DVector<f64>,
    that: &DMatrix<f64>,
    spec: &StructureSpec,
    canonical: &CanonicalMatrices,
) -> Result<InterpolationOperators> {
    let v = build_v(z, e, spec);
    let lblock = build_l(&v, &canonical.n_stack, spec)?;
    build_u_u(&lblock, &v, z, canonical, that, spec)
}

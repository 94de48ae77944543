//! Random ground-truth interpolants with known degree, and the data they interpolate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};
use crate::matpoly::{build_s_m, positive_real_check, MatrixPolynomial, PolyRole};
use crate::problem::InterpolationProblem;
use crate::structure::{build_canonical, StructureSpec};

use super::taylor_coefficients;

const MAX_DRAWS: usize = 1000;
const PR_GRID: usize = 256;
const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodePlan {
    /// One node at zero carrying all `n + 1` conditions.
    CovarianceExtension,
    /// Zero plus `n` distinct nodes, one condition each.
    NevanlinnaPick,
    /// Zero once, then one further node of multiplicity `n`.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// `None` draws a plan from the seed.
    pub plan: Option<NodePlan>,
    /// Number of scalar factors `(z - α)` shared by `A` and `Σ`.
    pub common_factors: usize,
    pub coeff_scale: f64,
    pub max_radius: f64,
    pub min_r_eig: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { plan: None, common_factors: 0, coeff_scale: 0.4, max_radius: 0.9, min_r_eig: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub a: MatrixPolynomial,
    pub b: MatrixPolynomial,
    pub sigma: MatrixPolynomial,
    pub r: DMatrix<f64>,
    /// McMillan degree of `F`.
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub problem: InterpolationProblem,
    pub truth: GroundTruth,
    pub plan: NodePlan,
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Completes `(A, Σ)` to `(A, B, Σ, R)`: `R` from the state covariance normalization,
/// `B` from the coefficient identities solved in least squares.
pub fn truth_from(a: &MatrixPolynomial, sigma: &MatrixPolynomial) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let spec = a.spec();
    let ell = spec.ell();
    let canonical = build_canonical(spec);
    let h = &canonical.h;
    let f = a.companion();
    let k0 = sigma.coeff() - a.coeff();

    // Q + H X(Q) H' = I with X(Q) = F X F' + K0 Q K0'.
    let state = |q: &DMatrix<f64>| linalg::solve_stein(&f, &(&k0 * q * k0.transpose()));
    let mut system = DMatrix::zeros(ell * ell, ell * ell);
    for col in 0..ell * ell {
        let mut e = DMatrix::zeros(ell, ell);
        e[(col % ell, col / ell)] = 1.0;
        let img = &e + h * state(&e)? * h.transpose();
        system.set_column(col, &linalg::vec(&img));
    }
    let rhs = linalg::vec(&DMatrix::identity(ell, ell));
    let q = linalg::symmetrize(&linalg::unvec(
        &system.lu().solve(&rhs).ok_or(Error::Singular("R normalization"))?,
        ell,
        ell,
    ));
    let min_q = linalg::min_sym_eig(&q);
    if min_q <= 0.0 {
        return Err(Error::NotPsd { min_eig: min_q });
    }
    let r = linalg::sym_sqrt(&q, 0.0)?;
    let b = b_from_identity(a, sigma, &r)?;
    Ok((b, r))
}

/// Solves `S(A)M(B) + S(B)M(A) = 2S(Σ)(I ⊗ RR')M(Σ)` for the coefficients of `B`.
fn b_from_identity(a: &MatrixPolynomial, sigma: &MatrixPolynomial, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = a.spec();
    let ell = spec.ell();
    let n = spec.n();
    let dim = spec.state_dim();
    let rr = r * r.transpose();
    let target = identity_lhs(a, &MatrixPolynomial::monomial(spec.clone(), PolyRole::B), sigma, &rr)?;
    let offset = linalg::vec(&target);
    let rows = (n + 1) * ell * ell;
    let mut system = DMatrix::zeros(rows, dim * ell);
    for col in 0..dim * ell {
        let mut e = DMatrix::zeros(dim, ell);
        e[(col % dim, col / dim)] = 1.0;
        let probe = MatrixPolynomial::new(spec.clone(), e, PolyRole::B)?;
        let img = linalg::vec(&identity_lhs(a, &probe, sigma, &rr)?) - &offset;
        system.set_column(col, &img);
    }
    let svd = system.clone().svd(true, true);
    let x = svd.solve(&(-&offset), 1e-13).map_err(|_| Error::Singular("B coefficient system"))?;
    let residual = max_abs(&linalg::unvec(&(&system * &x + &offset), rows, 1));
    if residual > IDENTITY_TOL {
        return Err(Error::NonConvergent { residual });
    }
    Ok(linalg::unvec(&x, dim, ell))
}

/// `S(A)M(B) + S(B)M(A) - 2S(Σ)(I ⊗ RR')M(Σ)`.
fn identity_lhs(a: &MatrixPolynomial, b: &MatrixPolynomial, sigma: &MatrixPolynomial, rr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.spec().n();
    let (sa, ma) = build_s_m(a)?;
    let (sb, mb) = build_s_m(b)?;
    let (ss, ms) = build_s_m(sigma)?;
    let weight = linalg::kron(&DMatrix::identity(n + 1, n + 1), rr);
    Ok(&sa * &mb + &sb * &ma - ss * weight * ms * 2.0)
}

/// Interpolation data `F^(k)(z_j)/k!` of `F = ½ A_*^{-1} B_*`.
pub fn taylor_data(a: &MatrixPolynomial, b: &MatrixPolynomial, nodes: &[f64], multiplicities: &[usize]) -> Result<Vec<Vec<DMatrix<f64>>>> {
    nodes
        .iter()
        .zip(multiplicities)
        .map(|(&z, &m)| taylor_coefficients(a, b, z, m))
        .collect()
}

/// Reversed coefficient blocks of `X(z) · Π(z - α)`.
fn with_common_factors(blocks: Vec<DMatrix<f64>>, roots: &[f64]) -> Vec<DMatrix<f64>> {
    let mut c = blocks;
    for &alpha in roots {
        let mut next = Vec::with_capacity(c.len() + 1);
        for k in 0..=c.len() {
            let mut blk = if k < c.len() { c[k].clone() } else { DMatrix::zeros(c[0].nrows(), c[0].ncols()) };
            if k >= 1 {
                blk -= &c[k - 1] * alpha;
            }
            next.push(blk);
        }
        c = next;
    }
    c
}

fn pack(blocks: &[DMatrix<f64>], spec: &StructureSpec) -> DMatrix<f64> {
    let ell = spec.ell();
    let n = spec.n();
    let mut coeff = DMatrix::zeros(n * ell, ell);
    for i in 0..ell {
        for k in 1..=n {
            coeff.set_row(i * n + k - 1, &blocks[k].row(i));
        }
    }
    coeff
}

fn draw_poly(rng: &mut ChaCha8Rng, spec: &StructureSpec, roots: &[f64], normal: &Normal<f64>, role: PolyRole) -> Result<MatrixPolynomial> {
    let ell = spec.ell();
    let base_n = spec.n() - roots.len();
    let blocks = if base_n == 0 {
        vec![DMatrix::identity(ell, ell)]
    } else {
        let base = StructureSpec::uniform(ell, base_n)?;
        let coeff = DMatrix::from_fn(base.state_dim(), ell, |_, _| normal.sample(rng));
        MatrixPolynomial::new(base, coeff, role)?.blocks()
    };
    MatrixPolynomial::new(spec.clone(), pack(&with_common_factors(blocks, roots), spec), role)
}

fn draw_nodes(rng: &mut ChaCha8Rng, plan: NodePlan, n: usize) -> (Vec<f64>, Vec<usize>) {
    match plan {
        NodePlan::CovarianceExtension => (vec![0.0], vec![n + 1]),
        NodePlan::NevanlinnaPick => loop {
            let mut nodes: Vec<f64> = vec![0.0];
            nodes.extend((0..n).map(|_| rng.random_range(-0.8..0.8)));
            let mut sorted = nodes.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            if sorted.windows(2).all(|w| w[1] - w[0] > 0.05) {
                return (nodes, vec![1; n + 1]);
            }
        },
        NodePlan::Mixed => loop {
            let z: f64 = rng.random_range(-0.8..0.8);
            if z.abs() > 0.1 {
                return (vec![0.0, z], vec![1, n]);
            }
        },
    }
}

/// Draws a ground truth of the given structure and the interpolation data it satisfies.
pub fn roundtrip_oracle(spec: &StructureSpec, seed: u64) -> Result<RoundTrip> {
    roundtrip_oracle_with(spec, seed, &OracleOptions::default())
}

pub fn roundtrip_oracle_with(spec: &StructureSpec, seed: u64, opts: &OracleOptions) -> Result<RoundTrip> {
    if !spec.is_uniform() {
        return Err(Error::UnequalIndices);
    }
    if opts.common_factors > spec.n() {
        return Err(Error::InvalidStructure("more common factors than the degree allows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, opts.coeff_scale).map_err(|e| Error::InvalidProblem(e.to_string()))?;
    let plan = opts.plan.unwrap_or_else(|| match rng.random_range(0..3) {
        0 => NodePlan::CovarianceExtension,
        1 => NodePlan::NevanlinnaPick,
        _ => NodePlan::Mixed,
    });

    for _ in 0..MAX_DRAWS {
        let roots: Vec<f64> = (0..opts.common_factors).map(|_| rng.random_range(-0.7..0.7)).collect();
        let a = draw_poly(&mut rng, spec, &roots, &normal, PolyRole::A)?;
        let sigma = draw_poly(&mut rng, spec, &roots, &normal, PolyRole::Sigma)?;
        if spectral_radius(&a.companion()) > opts.max_radius || spectral_radius(&sigma.companion()) > opts.max_radius {
            continue;
        }
        let Ok((b, r)) = truth_from(&a, &sigma) else { continue };
        if linalg::min_sym_eig(&(&r * r.transpose())) < opts.min_r_eig {
            continue;
        }
        let b = MatrixPolynomial::new(spec.clone(), b, PolyRole::B)?;
        if !b.is_schur().stable {
            continue;
        }
        match positive_real_check(&a, &b, PR_GRID) {
            Ok(pr) if pr.ok => {}
            _ => continue,
        }
        let (nodes, mults) = draw_nodes(&mut rng, plan, spec.n());
        let values = taylor_data(&a, &b, &nodes, &mults)?;
        let Ok(problem) = InterpolationProblem::new(spec.ell(), nodes, mults, values) else { continue };
        let degree = spec.ell() * (spec.n() - opts.common_factors);
        let truth = GroundTruth { a, b, sigma, r, degree };
        return Ok(RoundTrip { problem, truth, plan });
    }
    Err(Error::RejectionExhausted { draws: MAX_DRAWS })
}

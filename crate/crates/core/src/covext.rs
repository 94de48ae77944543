//! Covariance extension from data: simulation, covariance estimation, fitting and model reduction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cee::{solve, CeeSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::matpoly::{MatrixPolynomial, PolyRole, SpectralFactor};
use crate::problem::InterpolationProblem;
use crate::structure::StructureSpec;

pub const DEFAULT_SAMPLES: usize = 100_000;
const C0_FLOOR: f64 = 1e-12;

/// Output samples `y_0, ..., y_N`, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: DMatrix<f64>,
    pub seed: u64,
}

impl TimeSeries {
    pub fn new(samples: DMatrix<f64>, seed: u64) -> Self {
        Self { samples, seed }
    }

    pub fn ell(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    Estimated,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSequence {
    pub lags: Vec<DMatrix<f64>>,
    pub source: CovarianceSource,
}

impl CovarianceSequence {
    pub fn ell(&self) -> usize {
        self.lags.first().map_or(0, |c| c.nrows())
    }
}

/// Simulates `x⁺ = F x + K w`, `y = H x + R w` from a stationary initial state.
pub fn simulate(factor: &SpectralFactor, n: usize, seed: u64) -> Result<TimeSeries> {
    if !factor.is_stable() {
        return Err(Error::UnstableFactor);
    }
    let real = factor.realization();
    let ell = factor.ell();
    let dim = real.f.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| DVector::from_fn(len, |_, _| StandardNormal.sample(&mut rng));

    let x_cov = linalg::solve_stein(&real.f, &(&real.k * real.k.transpose()))?;
    let mut x = linalg::sym_sqrt(&x_cov, 1e-10)? * draw(dim);
    let mut samples = DMatrix::zeros(ell, n + 1);
    for t in 0..=n {
        let w = draw(ell);
        samples.set_column(t, &(&real.h * &x + &real.r * &w));
        x = &real.f * x + &real.k * w;
    }
    Ok(TimeSeries { samples, seed })
}

/// `Ĉ_k = (N - k + 1)^{-1} Σ_{t=k}^{N} y_t y_{t-k}'` for `k = 0..=lags`.
pub fn estimate_covariances(series: &TimeSeries, lags: usize) -> Result<CovarianceSequence> {
    let count = series.len();
    if count == 0 || lags + 1 > count.saturating_sub(1) {
        return Err(Error::InsufficientData { samples: count, lags });
    }
    let ell = series.ell();
    let y = &series.samples;
    let mut out = Vec::with_capacity(lags + 1);
    for k in 0..=lags {
        let mut c = DMatrix::zeros(ell, ell);
        for t in k..count {
            for i in 0..ell {
                let yi = y[(i, t)];
                for j in 0..ell {
                    c[(i, j)] += yi * y[(j, t - k)];
                }
            }
        }
        out.push(c / (count - k) as f64);
    }
    Ok(CovarianceSequence { lags: out, source: CovarianceSource::Estimated })
}

/// Covariances of the stationary output of `V(z)` driven by unit white noise.
pub fn exact_covariances(factor: &SpectralFactor, lags: usize) -> Result<CovarianceSequence> {
    if !factor.is_stable() {
        return Err(Error::UnstableFactor);
    }
    let real = factor.realization();
    let x = linalg::solve_stein(&real.f, &(&real.k * real.k.transpose()))?;
    let g = &real.f * &x * real.h.transpose() + &real.k * real.r.transpose();
    let mut out = vec![linalg::symmetrize(&(&real.h * &x * real.h.transpose() + &real.r * real.r.transpose()))];
    let mut hf = real.h.clone();
    for _ in 1..=lags {
        out.push(&hf * &g);
        hf *= &real.f;
    }
    Ok(CovarianceSequence { lags: out, source: CovarianceSource::Exact })
}

/// Normalized covariance-extension data `W_00 = ½I`, `W_0k = M C_k M'` with `M = C_0^{-1/2}`.
/// Also returns `M^{-1}`.
pub fn covariance_problem(covs: &CovarianceSequence, n: usize) -> Result<(InterpolationProblem, DMatrix<f64>)> {
    if covs.lags.len() < n + 1 {
        return Err(Error::InsufficientData { samples: covs.lags.len(), lags: n });
    }
    let ell = covs.ell();
    let c0 = linalg::symmetrize(&covs.lags[0]);
    let min_eig = linalg::min_sym_eig(&c0);
    if !(min_eig > C0_FLOOR * linalg::max_abs(&c0).max(1.0)) {
        return Err(Error::Infeasible { min_eig });
    }
    let m = linalg::sym_inv_sqrt(&c0)?;
    let scale = linalg::sym_sqrt(&c0, 0.0)?;
    let mut values = vec![DMatrix::identity(ell, ell) * 0.5];
    values.extend(covs.lags[1..=n].iter().map(|c| &m * c * m.transpose()));
    let problem = InterpolationProblem::new(ell, vec![0.0], vec![n + 1], vec![values])?;
    Ok((problem, scale))
}

/// A solution of the normalized problem and the congruence that undoes the normalization.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub solution: CeeSolution,
    /// `C_0^{1/2}`.
    pub scale: DMatrix<f64>,
    pub problem: InterpolationProblem,
}

impl FittedModel {
    pub fn degree(&self) -> usize {
        self.solution.sigma.spec().state_dim()
    }
}

pub fn fit_covariances(covs: &CovarianceSequence, sigma: &MatrixPolynomial, opts: &SolverOptions) -> Result<FittedModel> {
    let (problem, scale) = covariance_problem(covs, sigma.spec().n())?;
    let solution = solve(&problem, sigma, opts)?;
    Ok(FittedModel { solution, scale, problem })
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: FittedModel,
    pub full_p_eigenvalues: Vec<f64>,
    pub reduced_p_eigenvalues: Vec<f64>,
}

/// Refits with lags `C_0..C_{n'}` and a lower-degree prior `Σ'`.
pub fn reduce_model(full: &FittedModel, covs: &CovarianceSequence, new_sigma: &MatrixPolynomial, opts: &SolverOptions) -> Result<Reduction> {
    let full_spec = full.solution.sigma.spec();
    let new_spec = new_sigma.spec();
    if new_spec.ell() != full_spec.ell() || new_spec.n() > full_spec.n() {
        return Err(Error::InvalidStructure(format!(
            "reduced order {} must not exceed the full order {}",
            new_spec.n(),
            full_spec.n()
        )));
    }
    let model = fit_covariances(covs, new_sigma, opts)?;
    Ok(Reduction {
        full_p_eigenvalues: full.solution.p_eigenvalues.clone(),
        reduced_p_eigenvalues: model.solution.p_eigenvalues.clone(),
        model,
    })
}

/// Anything with a frequency response.
pub trait Response {
    fn ell(&self) -> usize;
    fn response(&self, z: Complex64) -> CMatrix;
}

impl Response for SpectralFactor {
    fn ell(&self) -> usize {
        SpectralFactor::ell(self)
    }

    fn response(&self, z: Complex64) -> CMatrix {
        self.eval(z)
    }
}

impl Response for FittedModel {
    fn ell(&self) -> usize {
        self.scale.nrows()
    }

    fn response(&self, z: Complex64) -> CMatrix {
        linalg::to_complex(&self.scale) * self.solution.spectral_factor().eval(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvRow {
    pub theta: f64,
    /// Descending.
    pub values: Vec<f64>,
}

/// Singular values of `V(e^{iθ})` on `points` uniformly spaced angles in `[0, π]`.
pub fn singular_value_grid(sys: &impl Response, points: usize) -> Vec<SvRow> {
    (0..points)
        .map(|k| {
            let theta = if points > 1 { std::f64::consts::PI * k as f64 / (points - 1) as f64 } else { 0.0 };
            let mut values: Vec<f64> = sys.response(Complex64::from_polar(1.0, theta)).singular_values().iter().copied().collect();
            values.sort_by(|a, b| b.total_cmp(a));
            SvRow { theta, values }
        })
        .collect()
}

pub fn sv_table_csv(rows: &[SvRow]) -> String {
    let ell = rows.first().map_or(0, |r| r.values.len());
    let mut out = String::from("theta");
    for i in 1..=ell {
        out.push_str(&format!(",sigma{i}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:.10e}", row.theta));
        for v in &row.values {
            out.push_str(&format!(",{v:.10e}"));
        }
        out.push('\n');
    }
    out
}

/// `Σ(z) = σ(z) I_ℓ` with `σ(z) = Π (z - r)`.
pub fn scalar_prior(ell: usize, roots: &[f64]) -> Result<MatrixPolynomial> {
    let n = roots.len();
    let spec = StructureSpec::uniform(ell, n)?;
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = c.clone();
        next.push(0.0);
        for k in 1..next.len() {
            next[k] -= r * c[k - 1];
        }
        c = next;
    }
    let mut coeff = DMatrix::zeros(n * ell, ell);
    for i in 0..ell {
        for k in 1..=n {
            coeff[(i * n + k - 1, i)] = c[k];
        }
    }
    MatrixPolynomial::new(spec, coeff, PolyRole::Sigma)
}

/// Zeros of the prior of the ten-state reference system.
pub const REFERENCE_SIGMA_ROOTS: [f64; 5] = [0.1, 0.3, 0.6, -0.2, -0.95];
/// Zeros kept by the order-six reduction.
pub const REDUCED_SIGMA_ROOTS: [f64; 3] = [0.1, 0.3, -0.95];

const REFERENCE_A: [f64; 20] = [
    -0.11, -0.02, -0.08, -0.15, 0.05, 0.10, -0.05, -0.09, -0.13, -0.09, 0.11, 0.07, 0.09, 0.19, -0.03, -0.03, -0.10, -0.13, 0.12,
    0.05,
];

/// The 2×2, degree-ten system `V(z) = A(z)^{-1} σ(z)` used for the model reduction experiment.
pub fn reference_system() -> SpectralFactor {
    let spec = StructureSpec::uniform(2, 5).expect("valid reference structure");
    let a = MatrixPolynomial::new(spec, DMatrix::from_row_slice(10, 2, &REFERENCE_A), PolyRole::A).expect("reference A");
    let sigma = scalar_prior(2, &REFERENCE_SIGMA_ROOTS).expect("reference prior");
    SpectralFactor::new(a, sigma, DMatrix::identity(2, 2)).expect("reference system")
}

/// Largest gap in dB between the singular values of two responses on a common grid.
pub fn max_db_gap(a: &[SvRow], b: &[SvRow]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.values.iter().zip(&rb.values).map(|(x, y)| (20.0 * (x / y).log10()).abs()))
        .fold(0.0, f64::max)
}

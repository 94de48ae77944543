//! Homotopy solver for the covariance extension equation and recovery of the interpolant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, CMatrix};
use crate::matpoly::{MatrixPolynomial, PolyRole, SpectralFactor};
use crate::problem::{pick_check, InterpolationProblem};
use crate::structure::{build_canonical, interpolation_operators, CanonicalMatrices, InterpolationOperators};

const JACOBIAN_CONDITION_LIMIT: f64 = 1e14;
const INCONSISTENT_P_TOL: f64 = 1e-6;
const PSD_TOL: f64 = 1e-9;
const SATURATION_TOL: f64 = 1e-12;
const SQRT_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_steps: usize,
    pub newton_tol: f64,
    pub rank_tol: f64,
    /// Unit-circle sample count used by certification.
    pub grid: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_newton_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            newton_tol: 1e-12,
            rank_tol: 1e-6,
            grid: 512,
            initial_step: 0.05,
            min_step: 1e-6,
            max_newton_iters: 20,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.max_steps == 0 || self.grid == 0 || self.max_newton_iters == 0 {
            return Err(Error::InvalidProblem("solver counts must be positive".into()));
        }
        if !positive(self.newton_tol) || !positive(self.rank_tol) || !positive(self.min_step) {
            return Err(Error::InvalidProblem("solver tolerances must be positive".into()));
        }
        if !positive(self.initial_step) || self.initial_step > 1.0 || self.min_step > self.initial_step {
            return Err(Error::InvalidProblem("step sizes must satisfy 0 < min_step <= initial_step <= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContinuationTrace {
    pub lambdas: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub newton_iters: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

impl ContinuationTrace {
    fn push(&mut self, lambda: f64, step: f64, iters: usize, residual: f64) {
        self.lambdas.push(lambda);
        self.step_sizes.push(step);
        self.newton_iters.push(iters);
        self.residual_norms.push(residual);
    }

    pub fn steps(&self) -> usize {
        self.lambdas.len().saturating_sub(1)
    }
}

/// Everything the homotopy needs: `u`, `U`, the canonical matrices, `Σ` and `Γ = J - ΣH`.
#[derive(Debug, Clone)]
pub struct CeeInput {
    pub operators: InterpolationOperators,
    pub canonical: CanonicalMatrices,
    pub sigma: MatrixPolynomial,
    pub gamma: DMatrix<f64>,
}

impl CeeInput {
    pub fn new(operators: InterpolationOperators, canonical: CanonicalMatrices, sigma: MatrixPolynomial) -> Result<Self> {
        let spec = sigma.spec();
        if !spec.is_uniform() {
            return Err(Error::UnequalIndices);
        }
        if operators.state_dim() != spec.state_dim() || operators.ell() != spec.ell() {
            return Err(Error::DimensionMismatch("operators and Sigma disagree in size".into()));
        }
        if !sigma.is_schur().stable {
            return Err(Error::UnstableSigma);
        }
        let gamma = canonical.gamma(sigma.coeff());
        Ok(Self { operators, canonical, sigma, gamma })
    }

    /// Derives problem matrices and operators for `problem` with prior `sigma`.
    pub fn from_problem(problem: &InterpolationProblem, sigma: &MatrixPolynomial) -> Result<Self> {
        let spec = sigma.spec();
        if spec.ell() != problem.ell() || spec.n() != problem.n() {
            return Err(Error::DimensionMismatch(format!(
                "Sigma has ell = {}, n = {}; problem has ell = {}, n = {}",
                spec.ell(),
                spec.n(),
                problem.ell(),
                problem.n()
            )));
        }
        let d = problem.derive()?;
        let canonical = build_canonical(spec);
        let operators = interpolation_operators(&d.z, &d.e, &d.that, spec, &canonical)?;
        Self::new(operators, canonical, sigma.clone())
    }

    pub fn ell(&self) -> usize {
        self.sigma.spec().ell()
    }

    pub fn n(&self) -> usize {
        self.sigma.spec().n()
    }

    pub fn dim(&self) -> usize {
        self.sigma.spec().state_dim()
    }

    fn blocks(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let ell = self.ell();
        let mut out = vec![DMatrix::identity(ell, ell)];
        out.extend(self.canonical.coefficient_blocks(x));
        out
    }

    fn zero_blocks(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let ell = self.ell();
        let mut out = vec![DMatrix::zeros(ell, ell)];
        out.extend(self.canonical.coefficient_blocks(x));
        out
    }

    /// `A(p, λ)` and `B(p, λ)` together with `u + U(Γp + Σ)`.
    pub fn coefficients(&self, p: &DMatrix<f64>, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let q = &self.gamma * p + self.sigma.coeff();
        let g = &self.operators.u + self.operators.apply_u(&q);
        (&q - &g * lambda, &q + &g * lambda, g)
    }

    /// First `nℓ` rows of `S(A)M(B) + S(B)M(A) - 2S(Σ)(I ⊗ (I - Hp))M(Σ)`.
    pub fn homotopy_residual(&self, p: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let (a, b, _) = self.coefficients(p, lambda);
        let ell = self.ell();
        let ab = self.blocks(&a);
        let bb = self.blocks(&b);
        let sb = self.blocks(self.sigma.coeff());
        let rr = DMatrix::identity(ell, ell) - &self.canonical.h * p;
        let n = self.n();
        let mut out = DMatrix::zeros(n * ell, ell);
        for r in 0..n {
            let mut acc = DMatrix::zeros(ell, ell);
            for c in r..=n {
                acc += &ab[c - r] * bb[c].transpose() + &bb[c - r] * ab[c].transpose();
                acc -= (&sb[c - r] * &rr * sb[c].transpose()) * 2.0;
            }
            out.view_mut((r * ell, 0), (ell, ell)).copy_from(&acc);
        }
        out
    }

    /// Derivative of the residual along coefficient directions `(dA, dB)` and `d(Hp)`.
    fn directional(
        &self,
        ab: &[DMatrix<f64>],
        bb: &[DMatrix<f64>],
        sb: &[DMatrix<f64>],
        da: &DMatrix<f64>,
        db: &DMatrix<f64>,
        dhp: Option<&DMatrix<f64>>,
    ) -> DMatrix<f64> {
        let ell = self.ell();
        let n = self.n();
        let dab = self.zero_blocks(da);
        let dbb = self.zero_blocks(db);
        let mut out = DMatrix::zeros(n * ell, ell);
        for r in 0..n {
            let mut acc = DMatrix::zeros(ell, ell);
            for c in r..=n {
                acc += &dab[c - r] * bb[c].transpose()
                    + &ab[c - r] * dbb[c].transpose()
                    + &dbb[c - r] * ab[c].transpose()
                    + &bb[c - r] * dab[c].transpose();
                if let Some(dhp) = dhp {
                    acc += (&sb[c - r] * dhp * sb[c].transpose()) * 2.0;
                }
            }
            out.view_mut((r * ell, 0), (ell, ell)).copy_from(&acc);
        }
        out
    }

    /// Jacobian of the column-stacked residual with respect to column-stacked `p`.
    pub fn homotopy_jacobian(&self, p: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let (a, b, _) = self.coefficients(p, lambda);
        let ab = self.blocks(&a);
        let bb = self.blocks(&b);
        let sb = self.blocks(self.sigma.coeff());
        let dim = self.dim();
        let ell = self.ell();
        let m = dim * ell;
        let mut jac = DMatrix::zeros(m, m);
        for col in 0..m {
            let mut e = DMatrix::zeros(dim, ell);
            e[(col % dim, col / dim)] = 1.0;
            let ge = &self.gamma * &e;
            let uge = self.operators.apply_u(&ge) * lambda;
            let he = &self.canonical.h * &e;
            let d = self.directional(&ab, &bb, &sb, &(&ge - &uge), &(&ge + &uge), Some(&he));
            jac.set_column(col, &linalg::vec(&d));
        }
        jac
    }

    /// Partial derivative of the column-stacked residual with respect to `λ`.
    pub fn homotopy_dlambda(&self, p: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let (a, b, g) = self.coefficients(p, lambda);
        let ab = self.blocks(&a);
        let bb = self.blocks(&b);
        let sb = self.blocks(self.sigma.coeff());
        self.directional(&ab, &bb, &sb, &(-&g), &g, None)
    }
}

struct Corrected {
    p: DMatrix<f64>,
    iters: usize,
    residual: f64,
}

enum CorrectorFailure {
    NoConvergence,
    Singular(f64),
}

fn newton(input: &CeeInput, start: DMatrix<f64>, lambda: f64, opts: &SolverOptions) -> std::result::Result<Corrected, CorrectorFailure> {
    let (rows, cols) = start.shape();
    let mut p = start;
    for iter in 0..=opts.max_newton_iters {
        let r = input.homotopy_residual(&p, lambda);
        let res = max_abs(&r);
        if !res.is_finite() {
            return Err(CorrectorFailure::NoConvergence);
        }
        if res <= opts.newton_tol {
            return Ok(Corrected { p, iters: iter, residual: res });
        }
        if iter == opts.max_newton_iters {
            break;
        }
        let jac = input.homotopy_jacobian(&p, lambda);
        let cond = linalg::condition_number(&jac);
        if !(cond <= JACOBIAN_CONDITION_LIMIT) {
            return Err(CorrectorFailure::Singular(cond));
        }
        let step = jac.lu().solve(&linalg::vec(&r)).ok_or(CorrectorFailure::Singular(f64::INFINITY))?;
        p -= linalg::unvec(&step, rows, cols);
    }
    Err(CorrectorFailure::NoConvergence)
}

/// Tracks `H(p, λ) = 0` from `(0, 0)` to `λ = 1` with an Euler predictor and Newton corrector.
pub fn continue_path(input: &CeeInput, opts: &SolverOptions) -> Result<(DMatrix<f64>, ContinuationTrace)> {
    opts.validate()?;
    let (dim, ell) = (input.dim(), input.ell());
    let mut p = DMatrix::zeros(dim, ell);
    let mut lambda = 0.0_f64;
    let mut step = opts.initial_step;
    let mut easy_streak = 0usize;
    let mut attempts = 0usize;
    let mut trace = ContinuationTrace::default();
    trace.push(0.0, 0.0, 0, max_abs(&input.homotopy_residual(&p, 0.0)));

    while lambda < 1.0 {
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(Error::MaxSteps { lambda, max_steps: opts.max_steps });
        }
        let h = step.min(1.0 - lambda);
        let target = if lambda + h >= 1.0 - 1e-15 { 1.0 } else { lambda + h };

        let jac = input.homotopy_jacobian(&p, lambda);
        let dh = linalg::vec(&input.homotopy_dlambda(&p, lambda));
        let tangent = jac
            .lu()
            .solve(&dh)
            .ok_or(Error::JacobianSingular { lambda, condition: f64::INFINITY })?;
        let guess = &p - linalg::unvec(&tangent, dim, ell) * (target - lambda);

        match newton(input, guess, target, opts) {
            Ok(c) => {
                p = c.p;
                lambda = target;
                trace.push(lambda, h, c.iters, c.residual);
                if c.iters <= 3 {
                    easy_streak += 1;
                    if easy_streak >= 3 {
                        step *= 2.0;
                        easy_streak = 0;
                    }
                } else {
                    easy_streak = 0;
                }
            }
            Err(failure) => {
                easy_streak = 0;
                let halved = h / 2.0;
                if halved < opts.min_step {
                    return Err(match failure {
                        CorrectorFailure::Singular(condition) => Error::JacobianSingular { lambda, condition },
                        CorrectorFailure::NoConvergence => Error::StepCollapse { lambda, step: halved },
                    });
                }
                step = halved;
            }
        }
    }
    Ok((p, trace))
}

#[derive(Debug, Clone)]
pub struct CeeSolution {
    pub p_matrix: DMatrix<f64>,
    /// `PH'` as tracked by the continuation.
    pub p: DMatrix<f64>,
    pub a: MatrixPolynomial,
    pub b: MatrixPolynomial,
    pub sigma: MatrixPolynomial,
    pub r: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub rank_p: usize,
    /// Eigenvalues of `P`, ascending.
    pub p_eigenvalues: Vec<f64>,
    pub cee_residual: f64,
    pub trace: ContinuationTrace,
}

impl CeeSolution {
    pub fn ell(&self) -> usize {
        self.sigma.spec().ell()
    }

    /// `F(z) = ½ A_*(z)^{-1} B_*(z)`.
    pub fn interpolant(&self, z: Complex64) -> Result<CMatrix> {
        let a = self.a.reverse().eval(z);
        let b = self.b.reverse().eval(z);
        let f = a.lu().solve(&b).ok_or(Error::Singular("A_*(z)"))?;
        Ok(f * Complex64::new(0.5, 0.0))
    }

    pub fn spectral_factor(&self) -> SpectralFactor {
        SpectralFactor { a: self.a.clone(), sigma: self.sigma.clone(), r: self.r.clone() }
    }
}

pub fn rank_with_tolerance(eigenvalues: &[f64], rank_tol: f64) -> usize {
    let max = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&v| v >= rank_tol * max).count()
}

/// Recovers `P`, `A`, `B`, `R`, `G` and `K` from the terminal `p`.
pub fn assemble_solution(p: DMatrix<f64>, input: &CeeInput, opts: &SolverOptions, trace: ContinuationTrace) -> Result<CeeSolution> {
    let ell = input.ell();
    let spec = input.sigma.spec().clone();
    let h = &input.canonical.h;
    let (a, b, g) = input.coefficients(&p, 1.0);

    let gp = &input.gamma * &p;
    let rhs = &g * g.transpose() - &gp * gp.transpose();
    let pm = linalg::symmetrize(&linalg::solve_stein(&input.gamma, &rhs)?);

    let deviation = max_abs(&(&pm * h.transpose() - &p));
    if !(deviation <= INCONSISTENT_P_TOL) {
        return Err(Error::InconsistentP { deviation });
    }
    let p_eigenvalues = linalg::sym_eigenvalues(&pm);
    let min_eig = p_eigenvalues.first().copied().unwrap_or(0.0);
    if min_eig < -PSD_TOL {
        return Err(Error::NotPsd { min_eig });
    }
    let rr = DMatrix::identity(ell, ell) - h * &pm * h.transpose();
    let sat = linalg::min_sym_eig(&rr);
    if !(sat >= SATURATION_TOL) {
        return Err(Error::Saturated { min_eig: sat });
    }
    let r = linalg::sym_sqrt(&rr, SQRT_CLIP)?;

    let a_poly = MatrixPolynomial::new(spec.clone(), a, PolyRole::A)?;
    let b_poly = MatrixPolynomial::new(spec, b, PolyRole::B)?;
    let f = a_poly.companion();
    let kt = linalg::solve(&r, &(&g - &f * &pm * h.transpose()).transpose(), "R")?;
    let rank_p = rank_with_tolerance(&p_eigenvalues, opts.rank_tol);
    let residual = cee_residual(&pm, input);

    Ok(CeeSolution {
        p_matrix: pm,
        p,
        a: a_poly,
        b: b_poly,
        sigma: input.sigma.clone(),
        r,
        g,
        k: kt.transpose(),
        rank_p,
        p_eigenvalues,
        cee_residual: residual,
        trace,
    })
}

/// Max-norm of `P - Γ(P - PH'HP)Γ' - gg'` with `g = u + U(Σ) + U(ΓPH')`.
pub fn cee_residual(p: &DMatrix<f64>, input: &CeeInput) -> f64 {
    let h = &input.canonical.h;
    let ph = p * h.transpose();
    let ops = &input.operators;
    let g = &ops.u + ops.apply_u(input.sigma.coeff()) + ops.apply_u(&(&input.gamma * &ph));
    let inner = p - &ph * ph.transpose();
    let res = p - &input.gamma * inner * input.gamma.transpose() - &g * g.transpose();
    max_abs(&res)
}

/// Pick test, operator construction, continuation and assembly.
pub fn solve(problem: &InterpolationProblem, sigma: &MatrixPolynomial, opts: &SolverOptions) -> Result<CeeSolution> {
    opts.validate()?;
    let d = problem.derive()?;
    let pick = pick_check(&d.w, &d.s, problem.ell());
    if !pick.feasible {
        return Err(Error::Infeasible { min_eig: pick.min_eig });
    }
    let input = CeeInput::from_problem(problem, sigma)?;
    let (p, trace) = continue_path(&input, opts)?;
    assemble_solution(p, &input, opts, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::StructureSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn example1() -> (InterpolationProblem, MatrixPolynomial) {
        let problem = InterpolationProblem::new(
            2,
            vec![0.0, 0.5],
            vec![1, 2],
            vec![
                vec![m(2, 2, &[0.5, 0.0, 0.0, 0.5])],
                vec![m(2, 2, &[1.0, 0.0, 0.0, 0.4]), m(2, 2, &[2.0, 0.1, 0.0, 0.1])],
            ],
        )
        .unwrap();
        let sigma = MatrixPolynomial::new(
            StructureSpec::uniform(2, 2).unwrap(),
            m(4, 2, &[1.0, 0.3, 0.2, 0.3, 0.1, 0.4, 0.7, 0.2]),
            PolyRole::Sigma,
        )
        .unwrap();
        (problem, sigma)
    }

    fn fd_jacobian(input: &CeeInput, p: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let h = 1e-6;
        let (rows, cols) = p.shape();
        let mut jac = DMatrix::zeros(rows * cols, rows * cols);
        for col in 0..rows * cols {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[(col % rows, col / rows)] += h;
            minus[(col % rows, col / rows)] -= h;
            let d = (input.homotopy_residual(&plus, lambda) - input.homotopy_residual(&minus, lambda)) / (2.0 * h);
            jac.set_column(col, &linalg::vec(&d));
        }
        jac
    }

    #[test]
    fn start_point_is_exact() {
        let (problem, sigma) = example1();
        let input = CeeInput::from_problem(&problem, &sigma).unwrap();
        let r = input.homotopy_residual(&DMatrix::zeros(4, 2), 0.0);
        assert_eq!(max_abs(&r), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = DMatrix::from_fn(4, 2, |_, _| rng.random_range(-0.5..0.5));
        assert!(max_abs(&input.homotopy_residual(&p, 0.0)) > 1e-3);
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let (problem, sigma) = example1();
        let input = CeeInput::from_problem(&problem, &sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let p = DMatrix::from_fn(4, 2, |_, _| rng.random_range(-0.5..0.5));
            let lambda = rng.random_range(0.0..1.0);
            let a = input.homotopy_jacobian(&p, lambda);
            let f = fd_jacobian(&input, &p, lambda);
            assert!(max_abs(&(&a - &f)) <= 1e-5 * max_abs(&f).max(1.0));

            let h = 1e-6;
            let dl = (input.homotopy_residual(&p, lambda + h) - input.homotopy_residual(&p, lambda - h)) / (2.0 * h);
            assert!(max_abs(&(input.homotopy_dlambda(&p, lambda) - dl)) < 1e-6);
        }
    }

    #[test]
    fn trivial_data_gives_trivial_solution() {
        let problem = InterpolationProblem::constant_half(2, vec![0.0, 0.5], vec![1, 2]).unwrap();
        let (_, sigma) = example1();
        let sol = solve(&problem, &sigma, &SolverOptions::default()).unwrap();
        assert_eq!(max_abs(&sol.p), 0.0);
        assert_eq!(sol.rank_p, 0);
        assert_eq!(sol.a.coeff(), sigma.coeff());
        assert_eq!(sol.b.coeff(), sigma.coeff());
        assert!(max_abs(&(&sol.r - DMatrix::identity(2, 2))) < 1e-15);
        let f = sol.interpolant(Complex64::new(0.3, 0.1)).unwrap();
        assert!(linalg::max_abs_c(&(f - CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0))) < 1e-14);
        assert_eq!(*sol.trace.lambdas.last().unwrap(), 1.0);
        assert_eq!(sol.trace.lambdas[0], 0.0);
    }

    #[test]
    fn example1_solution_identities() {
        let (problem, sigma) = example1();
        let sol = solve(&problem, &sigma, &SolverOptions::default()).unwrap();
        let input = CeeInput::from_problem(&problem, &sigma).unwrap();
        assert!(sol.cee_residual <= 1e-9);
        assert!(cee_residual(&(&sol.p_matrix + DMatrix::identity(4, 4) * 1e-3), &input) >= 1e-4);
        // B - A = 2G
        assert!(max_abs(&(sol.b.coeff() - sol.a.coeff() - &sol.g * 2.0)) < 1e-10);
        // A_n + B_n = 2 Σ_n RR'
        let n_last = &input.canonical.selectors[1];
        let lhs = n_last * (sol.a.coeff() + sol.b.coeff());
        let rhs = n_last * sigma.coeff() * &sol.r * sol.r.transpose() * 2.0;
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
        // P = Γ(P - PH'HP)Γ' + GG'
        let h = &input.canonical.h;
        let ph = &sol.p_matrix * h.transpose();
        let are = &sol.p_matrix - &input.gamma * (&sol.p_matrix - &ph * ph.transpose()) * input.gamma.transpose() - &sol.g * sol.g.transpose();
        assert!(max_abs(&are) < 1e-9);
        assert!(sol.a.is_schur().stable);
        let strictly_inside = sol.trace.lambdas.windows(2).all(|w| w[0] < w[1]);
        assert!(strictly_inside);
    }

    #[test]
    fn infeasible_and_unstable_inputs() {
        let (_, sigma) = example1();
        let bad = InterpolationProblem::new(
            2,
            vec![0.0, 0.5],
            vec![1, 2],
            vec![
                vec![m(2, 2, &[0.5, 0.0, 0.0, 0.5])],
                vec![m(2, 2, &[-40.0, 0.0, 0.0, 0.4]), m(2, 2, &[2.0, 0.1, 0.0, 0.1])],
            ],
        )
        .unwrap();
        assert!(matches!(solve(&bad, &sigma, &SolverOptions::default()), Err(Error::Infeasible { .. })));

        let (problem, _) = example1();
        let unstable = MatrixPolynomial::new(StructureSpec::uniform(2, 2).unwrap(), m(4, 2, &[0.0, 0.0, 0.0, 0.0, -4.0, 0.0, 0.0, -4.0]), PolyRole::Sigma).unwrap();
        assert_eq!(solve(&problem, &unstable, &SolverOptions::default()).unwrap_err(), Error::UnstableSigma);

        let uneq = MatrixPolynomial::monomial(StructureSpec::new(2, 2, vec![3, 1]).unwrap(), PolyRole::Sigma);
        assert!(matches!(
            solve(&problem, &uneq, &SolverOptions::default()),
            Err(Error::SingularL { unequal_indices: true, .. })
        ));
    }

    #[test]
    fn rank_threshold() {
        assert_eq!(rank_with_tolerance(&[0.0, 0.0], 1e-6), 0);
        assert_eq!(rank_with_tolerance(&[1e-9, 0.5, 1.0], 1e-6), 2);
        assert_eq!(rank_with_tolerance(&[-1e-12, 2.0], 1e-6), 1);
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions { min_step: 0.5, ..SolverOptions::default() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { newton_tol: 0.0, ..SolverOptions::default() };
        assert!(bad.validate().is_err());
    }
}

//! C interface to `cee-core`.
//!
//! Problems and solutions are opaque handles created by this library and released with the
//! matching `*_free` function. Every fallible call returns a [`CeeStatus`]; on failure the
//! message is available from [`cee_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cee_core::cee::{solve, CeeSolution as CoreSolution, SolverOptions};
use cee_core::cli::files::{ProblemFile, SolutionFile};
use cee_core::cli::{status_of, Status};
use cee_core::matpoly::MatrixPolynomial;
use cee_core::nalgebra::DMatrix;
use cee_core::problem::InterpolationProblem;
use cee_core::verify::certify;

/// Result codes. The first five agree with the exit codes of the `cee` binary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeeStatus {
    Ok = 0,
    Malformed = 1,
    Infeasible = 2,
    SolverFailure = 3,
    CertificationFailed = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

impl From<Status> for CeeStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => CeeStatus::Ok,
            Status::Malformed => CeeStatus::Malformed,
            Status::Infeasible => CeeStatus::Infeasible,
            Status::SolverFailure => CeeStatus::SolverFailure,
            Status::CertificationFailed => CeeStatus::CertificationFailed,
        }
    }
}

/// Solver settings mirroring the `[solver]` table of a problem file.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeeOptions {
    pub max_steps: usize,
    pub newton_tol: f64,
    pub rank_tol: f64,
    pub grid: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_newton_iters: usize,
}

impl From<SolverOptions> for CeeOptions {
    fn from(o: SolverOptions) -> Self {
        Self {
            max_steps: o.max_steps,
            newton_tol: o.newton_tol,
            rank_tol: o.rank_tol,
            grid: o.grid,
            initial_step: o.initial_step,
            min_step: o.min_step,
            max_newton_iters: o.max_newton_iters,
        }
    }
}

impl From<CeeOptions> for SolverOptions {
    fn from(o: CeeOptions) -> Self {
        Self {
            max_steps: o.max_steps,
            newton_tol: o.newton_tol,
            rank_tol: o.rank_tol,
            grid: o.grid,
            initial_step: o.initial_step,
            min_step: o.min_step,
            max_newton_iters: o.max_newton_iters,
        }
    }
}

/// Matrices that can be copied out of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CeeMatrix {
    /// Coefficients of A(z), ℓn × ℓ.
    A = 0,
    B = 1,
    Sigma = 2,
    /// ℓ × ℓ normalization factor.
    R = 3,
    G = 4,
    K = 5,
    /// ℓn × ℓn state covariance.
    P = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeeReport {
    pub interp_residual: f64,
    pub spectral_residual: f64,
    pub pr_min_eig: f64,
    pub stable_a: bool,
    pub rank_p: usize,
    pub pass: bool,
}

pub struct CeeProblem {
    problem: InterpolationProblem,
    sigma: MatrixPolynomial,
    options: SolverOptions,
}

pub struct CeeSolution {
    solution: CoreSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Fail(CeeStatus, String);

impl From<cee_core::Error> for Fail {
    fn from(e: cee_core::Error) -> Self {
        Fail(status_of(&e).into(), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CeeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CeeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CeeStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CeeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(CeeStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message describing the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn cee_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cee_options_default() -> CeeOptions {
    SolverOptions::default().into()
}

/// Parses a problem file. On success `*out` owns a new handle.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cee_problem_from_toml(toml: *const c_char, out: *mut *mut CeeProblem) -> CeeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let file = ProblemFile::parse(str_arg(toml, "toml")?)?;
        let handle = CeeProblem { problem: file.problem()?, sigma: file.sigma()?, options: file.options() };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`cee_problem_from_toml`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cee_problem_free(problem: *mut CeeProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Options stored in the problem file, with defaults for absent entries.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cee_problem_options(problem: *const CeeProblem, out: *mut CeeOptions) -> CeeStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.options.into();
        Ok(())
    })
}

/// Solves the problem. `options` may be null to use the problem's own options.
///
/// # Safety
/// `problem` must be a live handle, `options` null or valid, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cee_solve(problem: *const CeeProblem, options: *const CeeOptions, out: *mut *mut CeeSolution) -> CeeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let opts = options.as_ref().map_or(p.options, |o| SolverOptions::from(*o));
        opts.validate()?;
        let solution = solve(&p.problem, &p.sigma, &opts)?;
        *out = Box::into_raw(Box::new(CeeSolution { solution }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a handle from [`cee_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cee_solution_free(solution: *mut CeeSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Writes ℓ, n, rank P and the number of continuation steps. Any output pointer may be null.
///
/// # Safety
/// `solution` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn cee_solution_info(
    solution: *const CeeSolution,
    ell: *mut usize,
    n: *mut usize,
    rank_p: *mut usize,
    steps: *mut usize,
) -> CeeStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        for (dst, v) in [(ell, s.ell()), (n, s.sigma.spec().n()), (rank_p, s.rank_p), (steps, s.trace.steps())] {
            if let Some(d) = dst.as_mut() {
                *d = v;
            }
        }
        Ok(())
    })
}

/// Copies a matrix row-major into `buf`, which must hold at least rows·cols values.
///
/// `rows` and `cols` are written even when the buffer is too small, so a call with a null
/// `buf` and `len = 0` queries the shape.
///
/// # Safety
/// `solution` must be a live handle; `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cee_solution_matrix(
    solution: *const CeeSolution,
    which: CeeMatrix,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> CeeStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let m: &DMatrix<f64> = match which {
            CeeMatrix::A => s.a.coeff(),
            CeeMatrix::B => s.b.coeff(),
            CeeMatrix::Sigma => s.sigma.coeff(),
            CeeMatrix::R => &s.r,
            CeeMatrix::G => &s.g,
            CeeMatrix::K => &s.k,
            CeeMatrix::P => &s.p_matrix,
        };
        if let Some(r) = rows.as_mut() {
            *r = m.nrows();
        }
        if let Some(c) = cols.as_mut() {
            *c = m.ncols();
        }
        let needed = m.len();
        if buf.is_null() || len < needed {
            return Err(Fail(CeeStatus::BufferTooSmall, format!("buffer holds {len} values, {needed} needed")));
        }
        let dst = std::slice::from_raw_parts_mut(buf, needed);
        for (i, row) in m.row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                dst[i * m.ncols() + j] = *v;
            }
        }
        Ok(())
    })
}

/// Certifies a solution against a problem on a `grid`-point unit-circle sample.
/// Returns `CertificationFailed` (with `*out` filled) when a threshold is missed.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cee_certify(
    solution: *const CeeSolution,
    problem: *const CeeProblem,
    grid: usize,
    out: *mut CeeReport,
) -> CeeStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if grid == 0 {
            return Err(Fail(CeeStatus::Malformed, "grid must be positive".into()));
        }
        let r = certify(s, &p.problem, grid)?;
        *out = CeeReport {
            interp_residual: r.interp_residual,
            spectral_residual: r.spectral_residual,
            pr_min_eig: r.pr_min_eig,
            stable_a: r.stable_a,
            rank_p: r.rank_p,
            pass: r.pass,
        };
        if r.pass {
            Ok(())
        } else {
            Err(Fail(CeeStatus::CertificationFailed, format!("certification failed:\n{r}")))
        }
    })
}

/// Serializes a solution in the solution-file format. Free the string with [`cee_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cee_solution_to_toml(solution: *const CeeSolution, out: *mut *mut c_char) -> CeeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let text = SolutionFile::from_solution(s, None, None).to_toml()?;
        let c = CString::new(text).map_err(|_| Fail(CeeStatus::Malformed, "solution text contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cee_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

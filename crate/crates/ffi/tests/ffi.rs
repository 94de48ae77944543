use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cee_ffi::*;

fn data(name: &str) -> CString {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = cee_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn load(name: &str) -> *mut CeeProblem {
    let mut problem = ptr::null_mut();
    assert_eq!(cee_problem_from_toml(data(name).as_ptr(), &mut problem), CeeStatus::Ok);
    problem
}

#[test]
fn solve_certify_and_read_back() {
    unsafe {
        let problem = load("example2.toml");
        let mut solution = ptr::null_mut();
        assert_eq!(cee_solve(problem, ptr::null(), &mut solution), CeeStatus::Ok);
        assert!(cee_last_error().is_null());

        let (mut ell, mut n, mut rank, mut steps) = (0, 0, 0, 0);
        assert_eq!(cee_solution_info(solution, &mut ell, &mut n, &mut rank, &mut steps), CeeStatus::Ok);
        assert_eq!((ell, n, rank), (2, 2, 4));
        assert!(steps > 0);

        let (mut rows, mut cols) = (0, 0);
        assert_eq!(cee_solution_matrix(solution, CeeMatrix::A, ptr::null_mut(), 0, &mut rows, &mut cols), CeeStatus::BufferTooSmall);
        assert_eq!((rows, cols), (4, 2));
        let mut a = vec![0.0; rows * cols];
        assert_eq!(cee_solution_matrix(solution, CeeMatrix::A, a.as_mut_ptr(), a.len(), &mut rows, &mut cols), CeeStatus::Ok);
        let printed = [0.9467, -0.1737, 0.3603, 0.3583, -0.0445, 1.0925, 0.2147, 0.7364];
        for (x, y) in a.iter().zip(printed) {
            assert!((x - y).abs() < 1e-3, "{x} vs {y}");
        }

        let mut report = CeeReport { interp_residual: 0.0, spectral_residual: 0.0, pr_min_eig: 0.0, stable_a: false, rank_p: 0, pass: false };
        assert_eq!(cee_certify(solution, problem, 256, &mut report), CeeStatus::Ok);
        assert!(report.pass && report.stable_a);
        assert!(report.interp_residual <= 1e-8);

        let mut text = ptr::null_mut();
        assert_eq!(cee_solution_to_toml(solution, &mut text), CeeStatus::Ok);
        let s = CStr::from_ptr(text).to_str().unwrap().to_owned();
        assert!(s.contains("rank_p = 4"));
        cee_string_free(text);

        cee_solution_free(solution);
        cee_problem_free(problem);
    }
}

#[test]
fn options_round_trip() {
    unsafe {
        let problem = load("example1.toml");
        let mut opts = cee_options_default();
        assert_eq!(cee_problem_options(problem, &mut opts), CeeStatus::Ok);
        assert_eq!(opts, cee_options_default());
        opts.max_steps = 2;
        let mut solution = ptr::null_mut();
        assert_eq!(cee_solve(problem, &opts, &mut solution), CeeStatus::SolverFailure);
        assert!(solution.is_null());
        assert!(last_error().contains("2 steps"));
        opts.newton_tol = -1.0;
        assert_eq!(cee_solve(problem, &opts, &mut solution), CeeStatus::Malformed);
        cee_problem_free(problem);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(cee_problem_from_toml(ptr::null(), &mut problem), CeeStatus::NullPointer);
        let bad = CString::new("ell = 2\nnodes = [").unwrap();
        assert_eq!(cee_problem_from_toml(bad.as_ptr(), &mut problem), CeeStatus::Malformed);
        assert!(problem.is_null());
        assert!(last_error().contains("format"));

        let problem = load("example1_unequal.toml");
        let mut solution = ptr::null_mut();
        assert_eq!(cee_solve(problem, ptr::null(), &mut solution), CeeStatus::Infeasible);
        assert!(last_error().contains("unequal"));
        cee_problem_free(problem);

        assert_eq!(cee_solution_info(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), CeeStatus::NullPointer);
        cee_solution_free(ptr::null_mut());
        cee_string_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cee.h");
    let text = std::fs::read_to_string(&header).unwrap();
    assert!(text.contains("typedef struct CeeProblem CeeProblem;"));
    assert!(text.contains("cee_solve("));
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, "#include \"cee.h\"\nint main(void) { CeeOptions o = cee_options_default(); return (int)o.grid == 0; }\n").unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler found; skipping");
            return;
        }
    };
    assert!(status.success());
}

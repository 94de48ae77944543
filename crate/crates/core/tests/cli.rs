use std::path::{Path, PathBuf};
use std::process::Command;

use cee_core::cli::files::{parse_series_csv, series_csv, SolutionFile};
use cee_core::covext::{reference_system, simulate};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn cee(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cee")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn last_line(text: &str) -> &str {
    text.lines().last().unwrap()
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("e2.toml");
    let problem = data("example2.toml");
    let (code, out) = cee(&["solve", problem.to_str().unwrap(), "-o", sol.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(last_line(&out), "status=ok exit=0");
    assert!(out.contains("pass: true"));

    let file = SolutionFile::parse(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(file.rank_p, 4);
    assert!(file.certification.as_ref().unwrap().pass);

    let (code, out) = cee(&["verify", sol.to_str().unwrap(), problem.to_str().unwrap(), "--grid", "128"]);
    assert_eq!(code, 0, "{out}");

    // The second example's solution does not interpolate the first example's data.
    let (code, out) = cee(&["verify", sol.to_str().unwrap(), data("example1.toml").to_str().unwrap()]);
    assert_eq!(code, 4, "{out}");
    assert_eq!(last_line(&out), "status=certification_failed exit=4");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    let problem = data("example1.toml");
    let (_, out_a) = cee(&["solve", problem.to_str().unwrap(), "-o", a.to_str().unwrap()]);
    let (_, out_b) = cee(&["solve", problem.to_str().unwrap(), "-o", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(out_a.replace("a.toml", ""), out_b.replace("b.toml", ""));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = cee(&["solve", data("example1_unequal.toml").to_str().unwrap(), "-o", dir.path().join("x.toml").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("unequal observability indices"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "ell = 2\nnodes = [0.0]\n").unwrap();
    let (code, out) = cee(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(last_line(&out), "status=malformed exit=1");

    let infeasible = std::fs::read_to_string(data("example1.toml")).unwrap().replace("data = [2.0, 0.1, 0.0, 0.1]", "data = [40.0, 0.1, 0.0, 0.1]");
    let path = dir.path().join("infeasible.toml");
    std::fs::write(&path, infeasible).unwrap();
    let (code, out) = cee(&["solve", path.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("Pick matrix"));

    let (code, _) = cee(&["solve", data("example1.toml").to_str().unwrap(), "-o", dir.path().join("y.toml").to_str().unwrap(), "--max-steps", "2"]);
    assert_eq!(code, 3);

    let (code, out) = cee(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("cee "));
}

#[test]
fn reduce_reference_system() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let (code, out) = cee(&[
        "reduce",
        data("reference_system.toml").to_str().unwrap(),
        "--reduced-roots",
        "0.1,0.3,-0.95",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--points",
        "64",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("full eigenvalues below 1e-2 of the largest: 4"));
    for f in ["covariances.csv", "solution.toml", "reduced_solution.toml", "p_spectrum.csv", "svgrid.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let grid = std::fs::read_to_string(out_dir.join("svgrid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 65);
    assert!(grid.starts_with("theta,true_sigma1,true_sigma2,full_sigma1"));

    let reduced = out_dir.join("reduced_solution.toml");
    let (code, csv) = cee(&["svgrid", reduced.to_str().unwrap(), "--points", "5"]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn covext_from_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate(&reference_system(), 20_000, 3).unwrap();
    let text = series_csv(&series);
    let back = parse_series_csv(&text, 3).unwrap().samples;
    assert!((back - &series.samples).amax() < 1e-10);
    let path = dir.path().join("y.csv");
    std::fs::write(&path, text).unwrap();
    let out_dir = dir.path().join("fit");
    let (code, out) = cee(&["covext", path.to_str().unwrap(), "--order", "5", "--out-dir", out_dir.to_str().unwrap(), "--points", "16"]);
    assert_eq!(code, 0, "{out}");
    let grid = std::fs::read_to_string(out_dir.join("svgrid.csv")).unwrap();
    assert!(grid.starts_with("theta,fit_sigma1,fit_sigma2"));

    let (code, out) = cee(&["covext", path.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("--roots or --order"));

    let (code, _) = cee(&["covext", data("reference_system.toml").to_str().unwrap(), "--exact-cov", "--lags", "2", "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(code, 1);
}

//! The `cee` command line.
//!
//! Every run ends with a status line `status=<name> exit=<code>` on standard output.

pub mod files;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cee::{solve, SolverOptions};
use crate::covext::{
    estimate_covariances, exact_covariances, fit_covariances, max_db_gap, reduce_model, scalar_prior, simulate, singular_value_grid,
    sv_table_csv, CovarianceSequence, FittedModel, SvRow, DEFAULT_SAMPLES,
};
use crate::error::Error;
use crate::matpoly::{MatrixPolynomial, PolyRole, SpectralFactor};
use crate::structure::StructureSpec;
use crate::verify::certify;

use files::{
    covariances_csv, format_matrix, is_system_toml, parse_series_csv, spectrum_csv, sv_grids_csv, ProblemFile, SolutionFile,
    SolverSection, SystemFile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Malformed,
    Infeasible,
    SolverFailure,
    CertificationFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Malformed => 1,
            Status::Infeasible => 2,
            Status::SolverFailure => 3,
            Status::CertificationFailed => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Malformed => "malformed",
            Status::Infeasible => "infeasible",
            Status::SolverFailure => "solver_failure",
            Status::CertificationFailed => "certification_failed",
        }
    }
}

/// Maps a library error onto the exit status it should produce.
pub fn status_of(e: &Error) -> Status {
    match e {
        Error::Infeasible { .. } | Error::SingularL { .. } | Error::SingularNormalization { .. } | Error::UnequalIndices => Status::Infeasible,
        Error::StepCollapse { .. }
        | Error::MaxSteps { .. }
        | Error::JacobianSingular { .. }
        | Error::InconsistentP { .. }
        | Error::NotPsd { .. }
        | Error::Saturated { .. }
        | Error::NonConvergent { .. }
        | Error::PathSingular { .. }
        | Error::Singular(_)
        | Error::UnstableA => Status::SolverFailure,
        _ => Status::Malformed,
    }
}

struct Failure {
    status: Status,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { status: status_of(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { status: Status::Malformed, message: e.to_string() }
    }
}

fn malformed(message: impl Into<String>) -> Failure {
    Failure { status: Status::Malformed, message: message.into() }
}

type CmdResult = std::result::Result<Status, Failure>;

#[derive(Parser, Debug)]
#[command(name = "cee", version, about = "Analytic interpolation with degree constraint via the covariance extension equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an interpolation problem and certify the result.
    Solve {
        problem: PathBuf,
        /// Solution file (default: <problem>.solution.toml).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Certify a solution file against a problem file.
    Verify {
        solution: PathBuf,
        problem: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Fit a covariance extension model to a system file or a CSV series.
    Covext(DataArgs),
    /// Fit the full model, then refit at lower order with a reduced prior.
    Reduce {
        #[command(flatten)]
        data: DataArgs,
        /// Zeros of the reduced scalar prior, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        reduced_roots: Vec<f64>,
    },
    /// Singular values of a system or solution on a grid over [0, π].
    Svgrid {
        input: PathBuf,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct SolverFlags {
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, base: SolverOptions) -> SolverOptions {
        SolverSection {
            max_steps: self.max_steps,
            newton_tol: self.newton_tol,
            rank_tol: self.rank_tol,
            grid: self.grid,
            ..SolverSection::default()
        }
        .apply(base)
    }
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// System file (TOML) or output series (CSV with a header row).
    input: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Simulated samples N; the series is y_0..y_N.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Highest covariance lag to compute (default: the model order).
    #[arg(long)]
    lags: Option<usize>,
    /// Use exact covariances of the system instead of simulating.
    #[arg(long)]
    exact_cov: bool,
    /// Zeros of a scalar prior σ(z)I, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    roots: Option<Vec<f64>>,
    /// Model order with all prior zeros at the origin.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Points of the singular value grid.
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[command(flatten)]
    solver: SolverFlags,
}

/// Runs the command line with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let status = match Cli::try_parse_from(args) {
        Ok(cli) => match dispatch(cli.command, out) {
            Ok(status) => status,
            Err(f) => {
                let _ = writeln!(out, "error: {}", f.message);
                f.status
            }
        },
        Err(e) => {
            let _ = write!(out, "{e}");
            if e.use_stderr() {
                Status::Malformed
            } else {
                Status::Ok
            }
        }
    };
    let _ = writeln!(out, "status={} exit={}", status.name(), status.code());
    let _ = out.flush();
    status.code()
}

fn dispatch(command: Command, out: &mut impl Write) -> CmdResult {
    match command {
        Command::Solve { problem, output, solver } => cmd_solve(&problem, output, &solver, out),
        Command::Verify { solution, problem, grid } => cmd_verify(&solution, &problem, grid, out),
        Command::Covext(data) => cmd_covext(&data, out),
        Command::Reduce { data, reduced_roots } => cmd_reduce(&data, &reduced_roots, out),
        Command::Svgrid { input, points, output } => cmd_svgrid(&input, points, output, out),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| malformed(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    fs::write(path, text).map_err(|e| malformed(format!("cannot write {}: {e}", path.display())))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(" ")
}

fn cmd_solve(path: &Path, output: Option<PathBuf>, flags: &SolverFlags, out: &mut impl Write) -> CmdResult {
    let file = ProblemFile::parse(&read(path)?)?;
    let problem = file.problem()?;
    let sigma = file.sigma()?;
    let opts = flags.apply(file.options());
    opts.validate()?;
    writeln!(out, "problem: ell={} n={} nodes={}", problem.ell(), problem.n(), problem.nodes().len())?;

    let sol = solve(&problem, &sigma, &opts)?;
    let report = certify(&sol, &problem, opts.grid)?;
    writeln!(out, "continuation: steps={}", sol.trace.steps())?;
    writeln!(out, "A =\n{}", format_matrix(sol.a.coeff()))?;
    writeln!(out, "B =\n{}", format_matrix(sol.b.coeff()))?;
    writeln!(out, "R =\n{}", format_matrix(&sol.r))?;
    writeln!(out, "P eigenvalues: {}", join(&sol.p_eigenvalues))?;
    writeln!(out, "cee_residual: {:.6e}", sol.cee_residual)?;
    writeln!(out, "{report}")?;

    let target = output.unwrap_or_else(|| path.with_extension("solution.toml"));
    write_file(&target, &SolutionFile::from_solution(&sol, None, Some(&report)).to_toml()?)?;
    writeln!(out, "solution: {}", target.display())?;
    Ok(if report.pass { Status::Ok } else { Status::CertificationFailed })
}

fn cmd_verify(solution: &Path, problem: &Path, grid: Option<usize>, out: &mut impl Write) -> CmdResult {
    let sol = SolutionFile::parse(&read(solution)?)?.to_solution()?;
    let file = ProblemFile::parse(&read(problem)?)?;
    let problem = file.problem()?;
    let grid = grid.unwrap_or(file.options().grid);
    if grid == 0 {
        return Err(malformed("grid must be positive"));
    }
    let report = certify(&sol, &problem, grid)?;
    writeln!(out, "{report}")?;
    Ok(if report.pass { Status::Ok } else { Status::CertificationFailed })
}

struct Data {
    covs: CovarianceSequence,
    prior: MatrixPolynomial,
    truth: Option<SpectralFactor>,
    opts: SolverOptions,
}

fn load_data(args: &DataArgs, out: &mut impl Write) -> std::result::Result<Data, Failure> {
    let opts = args.solver.apply(SolverOptions::default());
    opts.validate()?;
    let is_csv = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let text = read(&args.input)?;
    let (truth, ell) = if is_csv {
        if args.exact_cov {
            return Err(malformed("--exact-cov needs a system file"));
        }
        (None, None)
    } else {
        let factor = SystemFile::parse(&text)?.factor()?;
        let ell = factor.ell();
        (Some(factor), Some(ell))
    };
    let series = if is_csv { Some(parse_series_csv(&text, args.seed)?) } else { None };
    let ell = ell.or(series.as_ref().map(|s| s.ell())).unwrap_or(0);

    let prior = match (&args.roots, args.order, &truth) {
        (Some(roots), _, _) => scalar_prior(ell, roots)?,
        (None, Some(order), _) => MatrixPolynomial::monomial(StructureSpec::uniform(ell, order)?, PolyRole::Sigma),
        (None, None, Some(t)) => t.sigma.clone(),
        (None, None, None) => return Err(malformed("a series needs a prior: pass --roots or --order")),
    };
    let n = prior.spec().n();
    let lags = args.lags.unwrap_or(n);
    if lags < n {
        return Err(malformed(format!("--lags {lags} is below the model order {n}")));
    }

    let covs = match (&truth, series) {
        (Some(t), _) if args.exact_cov => exact_covariances(t, lags)?,
        (Some(t), _) => estimate_covariances(&simulate(t, args.samples, args.seed)?, lags)?,
        (None, Some(s)) => estimate_covariances(&s, lags)?,
        (None, None) => unreachable!("either a system or a series is loaded"),
    };
    let source = if args.exact_cov { "exact".to_string() } else { format!("estimated (seed {}, N = {})", args.seed, args.samples) };
    writeln!(out, "covariances: {source}, lags 0..{lags}")?;
    Ok(Data { covs, prior, truth, opts })
}

fn report_spectrum(label: &str, model: &FittedModel, out: &mut impl Write) -> std::io::Result<()> {
    let ev = &model.solution.p_eigenvalues;
    let max = ev.iter().copied().fold(0.0, f64::max);
    let small = ev.iter().filter(|&&v| v < 1e-2 * max).count();
    writeln!(out, "{label} P eigenvalues: {}", join(ev))?;
    writeln!(out, "{label} eigenvalues below 1e-2 of the largest: {small}")?;
    writeln!(out, "{label} rank_P: {}", model.solution.rank_p)
}

fn certify_model(model: &FittedModel, opts: &SolverOptions) -> std::result::Result<crate::verify::CertificationReport, Failure> {
    Ok(certify(&model.solution, &model.problem, opts.grid)?)
}

fn cmd_covext(args: &DataArgs, out: &mut impl Write) -> CmdResult {
    let data = load_data(args, out)?;
    let model = fit_covariances(&data.covs, &data.prior, &data.opts)?;
    let report = certify_model(&model, &data.opts)?;
    report_spectrum("fit", &model, out)?;
    writeln!(out, "{report}")?;

    fs::create_dir_all(&args.out_dir)?;
    let fit_grid = singular_value_grid(&model, args.points);
    let mut grids: Vec<(&str, &[SvRow])> = Vec::new();
    let truth_grid = data.truth.as_ref().map(|t| singular_value_grid(t, args.points));
    if let Some(t) = &truth_grid {
        grids.push(("true", t));
        writeln!(out, "fit vs true max gap: {:.4} dB", max_db_gap(&fit_grid, t))?;
    }
    grids.push(("fit", &fit_grid));
    write_file(&args.out_dir.join("covariances.csv"), &covariances_csv(&data.covs))?;
    write_file(&args.out_dir.join("solution.toml"), &SolutionFile::from_model(&model, Some(&report)).to_toml()?)?;
    write_file(&args.out_dir.join("p_spectrum.csv"), &spectrum_csv(&[("fit", &model.solution.p_eigenvalues)]))?;
    write_file(&args.out_dir.join("svgrid.csv"), &sv_grids_csv(&grids))?;
    writeln!(out, "output: {}", args.out_dir.display())?;
    Ok(if report.pass { Status::Ok } else { Status::CertificationFailed })
}

fn cmd_reduce(args: &DataArgs, reduced_roots: &[f64], out: &mut impl Write) -> CmdResult {
    let data = load_data(args, out)?;
    let full = fit_covariances(&data.covs, &data.prior, &data.opts)?;
    let reduced_prior = scalar_prior(data.prior.spec().ell(), reduced_roots)?;
    let reduction = reduce_model(&full, &data.covs, &reduced_prior, &data.opts)?;
    let model = &reduction.model;
    let report = certify_model(model, &data.opts)?;
    report_spectrum("full", &full, out)?;
    report_spectrum("reduced", model, out)?;
    writeln!(out, "{report}")?;

    fs::create_dir_all(&args.out_dir)?;
    let full_grid = singular_value_grid(&full, args.points);
    let reduced_grid = singular_value_grid(model, args.points);
    let truth_grid = data.truth.as_ref().map(|t| singular_value_grid(t, args.points));
    let mut grids: Vec<(&str, &[SvRow])> = Vec::new();
    if let Some(t) = &truth_grid {
        grids.push(("true", t));
        writeln!(out, "reduced vs true max gap: {:.4} dB", max_db_gap(&reduced_grid, t))?;
    }
    grids.push(("full", &full_grid));
    grids.push(("reduced", &reduced_grid));
    write_file(&args.out_dir.join("covariances.csv"), &covariances_csv(&data.covs))?;
    write_file(&args.out_dir.join("solution.toml"), &SolutionFile::from_model(&full, None).to_toml()?)?;
    write_file(&args.out_dir.join("reduced_solution.toml"), &SolutionFile::from_model(model, Some(&report)).to_toml()?)?;
    write_file(
        &args.out_dir.join("p_spectrum.csv"),
        &spectrum_csv(&[("full", &reduction.full_p_eigenvalues), ("reduced", &reduction.reduced_p_eigenvalues)]),
    )?;
    write_file(&args.out_dir.join("svgrid.csv"), &sv_grids_csv(&grids))?;
    writeln!(out, "output: {}", args.out_dir.display())?;
    Ok(if report.pass { Status::Ok } else { Status::CertificationFailed })
}

fn cmd_svgrid(input: &Path, points: usize, output: Option<PathBuf>, out: &mut impl Write) -> CmdResult {
    if points == 0 {
        return Err(malformed("points must be positive"));
    }
    let text = read(input)?;
    let rows = if is_system_toml(&text) {
        let factor = SystemFile::parse(&text)?.factor()?;
        if !factor.is_stable() {
            return Err(Error::UnstableFactor.into());
        }
        singular_value_grid(&factor, points)
    } else {
        singular_value_grid(&SolutionFile::parse(&text)?.to_model()?, points)
    };
    let csv = sv_table_csv(&rows);
    match output {
        Some(path) => {
            write_file(&path, &csv)?;
            writeln!(out, "svgrid: {}", path.display())?;
        }
        None => write!(out, "{csv}")?,
    }
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(status_of(&Error::Infeasible { min_eig: -1.0 }).code(), 2);
        assert_eq!(status_of(&Error::SingularL { condition: 1e20, unequal_indices: true }).code(), 2);
        assert_eq!(status_of(&Error::StepCollapse { lambda: 0.5, step: 1e-7 }).code(), 3);
        assert_eq!(status_of(&Error::Format("x".into())).code(), 1);
    }

    #[test]
    fn parse_errors_end_with_status() {
        let mut buf = Vec::new();
        let code = run(["cee", "frobnicate"], &mut buf);
        assert_eq!(code, 1);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().last().unwrap(), "status=malformed exit=1");

        let mut buf = Vec::new();
        assert_eq!(run(["cee", "--help"], &mut buf), 0);
        assert!(String::from_utf8(buf).unwrap().ends_with("status=ok exit=0\n"));
    }

    #[test]
    fn missing_file_is_malformed() {
        let mut buf = Vec::new();
        assert_eq!(run(["cee", "solve", "/nonexistent/problem.toml"], &mut buf), 1);
    }
}

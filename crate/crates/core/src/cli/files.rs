//! TOML and CSV formats for problems, solutions, systems and tables.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cee::{CeeSolution, ContinuationTrace, SolverOptions};
use crate::covext::{scalar_prior, CovarianceSequence, FittedModel, SvRow, TimeSeries};
use crate::error::{Error, Result};
use crate::matpoly::{MatrixPolynomial, PolyRole, SpectralFactor};
use crate::problem::InterpolationProblem;
use crate::structure::{build_canonical, StructureSpec};
use crate::verify::CertificationReport;

/// A dense matrix stored row-major with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix declared {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&DMatrix<f64>> for MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueEntry {
    pub j: usize,
    pub k: usize,
    pub matrix: MatrixData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaData {
    pub indices: Vec<usize>,
    pub coeff: MatrixData,
}

impl SigmaData {
    pub fn to_poly(&self, role: PolyRole) -> Result<MatrixPolynomial> {
        let coeff = self.coeff.to_matrix()?;
        let ell = self.indices.len();
        let total: usize = self.indices.iter().sum();
        if ell == 0 || !total.is_multiple_of(ell) {
            return Err(Error::InvalidStructure(format!("indices {:?} do not sum to a multiple of ell", self.indices)));
        }
        let spec = StructureSpec::new(ell, total / ell, self.indices.clone())?;
        MatrixPolynomial::new(spec, coeff, role)
    }

    pub fn from_poly(poly: &MatrixPolynomial) -> Self {
        Self { indices: poly.spec().indices().to_vec(), coeff: poly.coeff().into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_newton_iters: Option<usize>,
}

impl SolverSection {
    pub fn apply(&self, base: SolverOptions) -> SolverOptions {
        SolverOptions {
            max_steps: self.max_steps.unwrap_or(base.max_steps),
            newton_tol: self.newton_tol.unwrap_or(base.newton_tol),
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            grid: self.grid.unwrap_or(base.grid),
            initial_step: self.initial_step.unwrap_or(base.initial_step),
            min_step: self.min_step.unwrap_or(base.min_step),
            max_newton_iters: self.max_newton_iters.unwrap_or(base.max_newton_iters),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Format(e.to_string().trim_end().to_string()))
}

fn write_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

/// Interpolation data, prior and solver options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub ell: usize,
    pub nodes: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub values: Vec<ValueEntry>,
    pub sigma: SigmaData,
    #[serde(default, skip_serializing_if = "SolverSection::is_empty")]
    pub solver: SolverSection,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        write_toml(self)
    }

    pub fn from_parts(problem: &InterpolationProblem, sigma: &MatrixPolynomial, solver: SolverSection) -> Self {
        let values = problem
            .values()
            .iter()
            .enumerate()
            .flat_map(|(j, vals)| vals.iter().enumerate().map(move |(k, m)| ValueEntry { j, k, matrix: m.into() }))
            .collect();
        Self {
            ell: problem.ell(),
            nodes: problem.nodes().to_vec(),
            multiplicities: problem.multiplicities().to_vec(),
            values,
            sigma: SigmaData::from_poly(sigma),
            solver,
        }
    }

    pub fn problem(&self) -> Result<InterpolationProblem> {
        let mut slots: Vec<Vec<Option<DMatrix<f64>>>> = self.multiplicities.iter().map(|&m| vec![None; m]).collect();
        for v in &self.values {
            let slot = slots
                .get_mut(v.j)
                .and_then(|s| s.get_mut(v.k))
                .ok_or_else(|| Error::Format(format!("value (j = {}, k = {}) is outside the node multiplicities", v.j, v.k)))?;
            if slot.is_some() {
                return Err(Error::Format(format!("value (j = {}, k = {}) given twice", v.j, v.k)));
            }
            *slot = Some(v.matrix.to_matrix()?);
        }
        let mut values = Vec::with_capacity(slots.len());
        for (j, s) in slots.into_iter().enumerate() {
            let mut row = Vec::with_capacity(s.len());
            for (k, m) in s.into_iter().enumerate() {
                row.push(m.ok_or_else(|| Error::Format(format!("value (j = {j}, k = {k}) is missing")))?);
            }
            values.push(row);
        }
        InterpolationProblem::new(self.ell, self.nodes.clone(), self.multiplicities.clone(), values)
    }

    pub fn sigma(&self) -> Result<MatrixPolynomial> {
        self.sigma.to_poly(PolyRole::Sigma)
    }

    pub fn options(&self) -> SolverOptions {
        self.solver.apply(SolverOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationSection {
    pub interp_residual: f64,
    pub spectral_residual: f64,
    pub pr_min_eig: f64,
    pub stable_a: bool,
    pub pass: bool,
}

impl From<&CertificationReport> for CertificationSection {
    fn from(r: &CertificationReport) -> Self {
        Self {
            interp_residual: r.interp_residual,
            spectral_residual: r.spectral_residual,
            pr_min_eig: r.pr_min_eig,
            stable_a: r.stable_a,
            pass: r.pass,
        }
    }
}

/// A solved interpolant. `scale` is present for covariance fits and maps the
/// normalized model back to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub ell: usize,
    pub indices: Vec<usize>,
    pub rank_p: usize,
    pub cee_residual: f64,
    pub steps: usize,
    pub p_eigenvalues: Vec<f64>,
    pub a: MatrixData,
    pub b: MatrixData,
    pub sigma: MatrixData,
    pub r: MatrixData,
    pub g: MatrixData,
    pub k: MatrixData,
    pub p: MatrixData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationSection>,
}

impl SolutionFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        write_toml(self)
    }

    pub fn from_solution(sol: &CeeSolution, scale: Option<&DMatrix<f64>>, report: Option<&CertificationReport>) -> Self {
        Self {
            ell: sol.ell(),
            indices: sol.sigma.spec().indices().to_vec(),
            rank_p: sol.rank_p,
            cee_residual: sol.cee_residual,
            steps: sol.trace.steps(),
            p_eigenvalues: sol.p_eigenvalues.clone(),
            a: sol.a.coeff().into(),
            b: sol.b.coeff().into(),
            sigma: sol.sigma.coeff().into(),
            r: (&sol.r).into(),
            g: (&sol.g).into(),
            k: (&sol.k).into(),
            p: (&sol.p_matrix).into(),
            scale: scale.map(Into::into),
            certification: report.map(Into::into),
        }
    }

    pub fn from_model(model: &FittedModel, report: Option<&CertificationReport>) -> Self {
        Self::from_solution(&model.solution, Some(&model.scale), report)
    }

    fn spec(&self) -> Result<StructureSpec> {
        let total: usize = self.indices.iter().sum();
        if self.indices.len() != self.ell || self.ell == 0 || !total.is_multiple_of(self.ell) {
            return Err(Error::InvalidStructure(format!("indices {:?} do not match ell = {}", self.indices, self.ell)));
        }
        StructureSpec::new(self.ell, total / self.ell, self.indices.clone())
    }

    /// Rebuilds the solution; the continuation trace is not stored and comes back empty.
    pub fn to_solution(&self) -> Result<CeeSolution> {
        let spec = self.spec()?;
        let poly = |m: &MatrixData, role| MatrixPolynomial::new(spec.clone(), m.to_matrix()?, role);
        let sigma = poly(&self.sigma, PolyRole::Sigma)?;
        let p_matrix = self.p.to_matrix()?;
        let dim = spec.state_dim();
        if p_matrix.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!("P must be {dim}x{dim}")));
        }
        let h = build_canonical(&spec).h;
        Ok(CeeSolution {
            p: &p_matrix * h.transpose(),
            p_matrix,
            a: poly(&self.a, PolyRole::A)?,
            b: poly(&self.b, PolyRole::B)?,
            sigma,
            r: self.r.to_matrix()?,
            g: self.g.to_matrix()?,
            k: self.k.to_matrix()?,
            rank_p: self.rank_p,
            p_eigenvalues: self.p_eigenvalues.clone(),
            cee_residual: self.cee_residual,
            trace: ContinuationTrace::default(),
        })
    }

    pub fn to_model(&self) -> Result<FittedModel> {
        let solution = self.to_solution()?;
        let scale = match &self.scale {
            Some(s) => s.to_matrix()?,
            None => DMatrix::identity(self.ell, self.ell),
        };
        let problem = InterpolationProblem::constant_half(self.ell, vec![0.0], vec![1])?;
        Ok(FittedModel { solution, scale, problem })
    }
}

/// A spectral factor `V(z) = A(z)^{-1} Σ(z) R`. `Σ` comes either as a coefficient
/// matrix or as the zeros of a scalar prior `σ(z) I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub indices: Vec<usize>,
    pub a: MatrixData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_roots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixData>,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        write_toml(self)
    }

    pub fn factor(&self) -> Result<SpectralFactor> {
        let ell = self.indices.len();
        let a = SigmaData { indices: self.indices.clone(), coeff: self.a.clone() }.to_poly(PolyRole::A)?;
        let sigma = match (&self.sigma, &self.sigma_roots) {
            (Some(s), None) => MatrixPolynomial::new(a.spec().clone(), s.to_matrix()?, PolyRole::Sigma)?,
            (None, Some(roots)) => {
                let s = scalar_prior(ell, roots)?;
                if s.spec() != a.spec() {
                    return Err(Error::InvalidStructure(format!(
                        "{} prior zeros do not match the indices {:?}",
                        roots.len(),
                        self.indices
                    )));
                }
                s
            }
            _ => return Err(Error::Format("give exactly one of `sigma` and `sigma_roots`".into())),
        };
        let r = match &self.r {
            Some(r) => r.to_matrix()?,
            None => DMatrix::identity(ell, ell),
        };
        SpectralFactor::new(a, sigma, r)
    }
}

/// Does this TOML text describe a system (as opposed to a solution)?
pub fn is_system_toml(text: &str) -> bool {
    text.parse::<toml::Table>().map(|t| !t.contains_key("rank_p") && t.contains_key("a")).unwrap_or(false)
}

pub fn parse_series_csv(text: &str, seed: u64) -> Result<TimeSeries> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Format("empty series file".into()))?;
    let ell = header.split(',').count();
    let mut data = Vec::new();
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ell {
            return Err(Error::Format(format!("series row {} has {} fields, expected {ell}", i + 1, fields.len())));
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Format(format!("bad number `{}` in series row {}", f.trim(), i + 1)))?;
            data.push(v);
        }
        count += 1;
    }
    Ok(TimeSeries::new(DMatrix::from_column_slice(ell, count, &data), seed))
}

pub fn series_csv(series: &TimeSeries) -> String {
    let ell = series.ell();
    let mut out = (1..=ell).map(|i| format!("y{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for t in 0..series.len() {
        let row: Vec<String> = (0..ell).map(|i| format!("{:.12e}", series.samples[(i, t)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn covariances_csv(covs: &CovarianceSequence) -> String {
    let mut out = String::from("lag,i,j,value\n");
    for (k, c) in covs.lags.iter().enumerate() {
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                let _ = writeln!(out, "{k},{},{},{:.12e}", i + 1, j + 1, c[(i, j)]);
            }
        }
    }
    out
}

pub fn spectrum_csv(named: &[(&str, &[f64])]) -> String {
    let mut out = String::from("model,index,eigenvalue\n");
    for (name, values) in named {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{v:.12e}", i + 1);
        }
    }
    out
}

/// Side-by-side singular value grids sharing the same angles.
pub fn sv_grids_csv(named: &[(&str, &[SvRow])]) -> String {
    let mut out = String::from("theta");
    for (name, rows) in named {
        for i in 1..=rows.first().map_or(0, |r| r.values.len()) {
            let _ = write!(out, ",{name}_sigma{i}");
        }
    }
    out.push('\n');
    let count = named.first().map_or(0, |(_, rows)| rows.len());
    for idx in 0..count {
        let _ = write!(out, "{:.12e}", named[0].1[idx].theta);
        for (_, rows) in named {
            for v in &rows[idx].values {
                let _ = write!(out, ",{v:.12e}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    (0..m.nrows())
        .map(|i| {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:>10.4}")).collect();
            format!("  [{}]", row.join(""))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

//! Command-line front end: `solve`, `sweep`, `dos` and `norm-integral`.
//!
//! Exit codes: 0 success, 1 I/O or solver failure, 2 unparsable input,
//! 3 invalid matrix or arguments, 4 a residual or oracle deviation above
//! the tolerance (the report is still printed).

pub mod report;
pub mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::error::Error;
use crate::oracle::{eig_all, DenseTridiag};
use crate::polyengine::BoundaryPolynomials;
use crate::presets::{two_edge_norm_integral, Preset};
use crate::qutmodel::normalize;
use crate::spectrum::{diagonalize, dos_curve, trapezoid, SolveOptions};

use report::{fmt_f64, OracleCheck, SpectrumReport};
use spec::MatrixSpec;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ZeroCoupling { .. }
            | Error::BlockMismatch { .. }
            | Error::BadIndices { .. }
            | Error::Shape(_)
            | Error::NonFinite { .. }
            | Error::InvalidArgument(_) => CliError::Validation(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qut",
    version,
    about = "Analytic diagonalization of quasi-uniform tridiagonal matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, shifts, densities and first components of a matrix.
    Solve {
        /// JSON matrix spec, or `-` for standard input.
        spec: PathBuf,
        /// Include full eigenvectors.
        #[arg(long)]
        vectors: bool,
        /// Compare against the bisection/inverse-iteration reference solver.
        #[arg(long)]
        oracle_check: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, env = "QUT_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Eigenvalues of a preset family across a parameter range, as CSV.
    Sweep {
        #[arg(long)]
        preset: Preset,
        /// Parameter to vary.
        #[arg(long)]
        param: String,
        /// `START:END`, inclusive.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Number of sweep points.
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        ell: usize,
        /// Fixed parameter values, `NAME=VALUE`; repeatable.
        #[arg(long = "set", value_name = "NAME=VALUE", allow_hyphen_values = true)]
        set: Vec<String>,
        /// Write the table here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Density of states on a uniform grid of k, as CSV with the trapezoid
    /// integral in a footer row.
    Dos {
        spec: PathBuf,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Large-size limit of the summed squared first components of the
    /// two-edge family.
    NormIntegral {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Initial trapezoid intervals (at least 64); doubled until converged.
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            spec,
            vectors,
            oracle_check,
            format,
            tol,
        } => cmd_solve(&spec, vectors, oracle_check, format, tol, out),
        Command::Sweep {
            preset,
            param,
            range,
            steps,
            ell,
            set,
            output,
        } => {
            let fixed = parse_assignments(&set)?;
            let (start, end) = parse_range(&range)?;
            let table = cmd_sweep(preset, &param, start, end, steps, ell, &fixed)?;
            match output {
                Some(path) => fs::write(path, table)?,
                None => out.write_all(table.as_bytes())?,
            }
            Ok(())
        }
        Command::Dos { spec, samples } => {
            let table = cmd_dos(&load_spec(&spec)?, samples)?;
            out.write_all(table.as_bytes())?;
            Ok(())
        }
        Command::NormIntegral { x, y, points } => {
            let value = two_edge_norm_integral(x, y, points)?;
            writeln!(out, "{}", fmt_f64(value))?;
            Ok(())
        }
    }
}

pub fn load_spec(path: &Path) -> Result<MatrixSpec, CliError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Parse(format!("standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
    };
    MatrixSpec::from_json(&text).map_err(|e| CliError::Parse(e.to_string()))
}

fn cmd_solve(
    path: &Path,
    vectors: bool,
    oracle_check: bool,
    format: Format,
    tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Validation(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let spec = load_spec(path)?;
    let report = solve_report(&spec, vectors, oracle_check, tol)?;
    let text = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    out.write_all(text.as_bytes())?;
    check_tolerance(&report, tol)
}

/// Builds the report for `solve`; public so that library users get the
/// same output without going through the binary.
pub fn solve_report(
    spec: &MatrixSpec,
    vectors: bool,
    oracle_check: bool,
    tol: f64,
) -> Result<SpectrumReport, CliError> {
    let m = spec.build()?;
    let s = diagonalize(
        &m,
        SolveOptions {
            want_vectors: vectors,
            ..Default::default()
        },
    )?;
    let mut report = SpectrumReport::new(&s, tol);
    if oracle_check {
        let (values, oracle_vectors) = eig_all(&DenseTridiag::from(&m), vectors)?;
        let max_eigenvalue_deviation = values
            .iter()
            .zip(&s.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let max_eigenvector_deviation = match (&s.vectors, &oracle_vectors) {
            (Some(mine), Some(theirs)) => Some(
                mine.iter()
                    .zip(theirs)
                    .map(|(a, b)| deviation_up_to_sign(a, b))
                    .fold(0.0, f64::max),
            ),
            _ => None,
        };
        report.oracle = Some(OracleCheck {
            max_eigenvalue_deviation,
            max_eigenvector_deviation,
        });
    }
    Ok(report)
}

fn deviation_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - s * y).abs())
        .fold(0.0, f64::max)
}

fn check_tolerance(report: &SpectrumReport, tol: f64) -> Result<(), CliError> {
    let residual = report.max_residual();
    if residual > tol {
        return Err(CliError::Tolerance(format!(
            "max residual {residual:e} > {tol:e}"
        )));
    }
    if let Some(o) = report.oracle {
        let worst = o
            .max_eigenvalue_deviation
            .max(o.max_eigenvector_deviation.unwrap_or(0.0));
        if worst > tol {
            return Err(CliError::Tolerance(format!(
                "oracle deviation {worst:e} > {tol:e}"
            )));
        }
    }
    Ok(())
}

fn parse_range(range: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Validation(format!("range must be START:END, got {range:?}"));
    let (a, b) = range.split_once(':').ok_or_else(bad)?;
    let start: f64 = a.trim().parse().map_err(|_| bad())?;
    let end: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((start, end))
}

fn parse_assignments(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    items
        .iter()
        .map(|item| {
            let bad = || CliError::Validation(format!("expected NAME=VALUE, got {item:?}"));
            let (k, v) = item.split_once('=').ok_or_else(bad)?;
            Ok((k.trim().to_string(), v.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// CSV with columns `<param>, lambda_1 … lambda_ℓ, out_of_band`. Points
/// where the family decouples (a zero coupling) take their eigenvalues from
/// the reference solver, since the analytic path needs a connected chain.
pub fn cmd_sweep(
    preset: Preset,
    param: &str,
    start: f64,
    end: f64,
    steps: usize,
    ell: usize,
    fixed: &BTreeMap<String, f64>,
) -> Result<String, CliError> {
    if !preset.params().contains(&param) {
        return Err(CliError::Validation(format!(
            "preset {preset} has no parameter {param:?}"
        )));
    }
    if fixed.contains_key(param) {
        return Err(CliError::Validation(format!(
            "{param} is both swept and fixed"
        )));
    }
    if !(start.is_finite() && end.is_finite())
        || start > end
        || steps == 0
        || (steps == 1 && start != end)
    {
        return Err(CliError::Validation(format!(
            "invalid range {start}:{end} with {steps} steps"
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![param.to_string()];
    header.extend((1..=ell).map(|i| format!("lambda_{i}")));
    header.push("out_of_band".into());
    w.write_record(&header).expect("in-memory write");
    for i in 0..steps {
        let value = if steps == 1 {
            start
        } else if i + 1 == steps {
            end
        } else {
            start + (end - start) * i as f64 / (steps - 1) as f64
        };
        let mut params = fixed.clone();
        params.insert(param.to_string(), value);
        let (eigenvalues, out_of_band) = match preset.build(ell, &params) {
            Ok(m) => {
                let s = diagonalize(&m, SolveOptions::default())?;
                (s.eigenvalues, s.counts.above_band + s.counts.below_band)
            }
            Err(Error::ZeroCoupling { .. }) => {
                let mut diag = vec![0.0; ell];
                let mut off = vec![1.0; ell.saturating_sub(1)];
                decoupled_entries(preset, &params, &mut diag, &mut off)?;
                let (values, _) = eig_all(&DenseTridiag::new(diag, off)?, false)?;
                let oob = values.iter().filter(|v| v.abs() > 2.0).count();
                (values, oob)
            }
            Err(e) => return Err(e.into()),
        };
        let mut row = vec![fmt_f64(value)];
        row.extend(eigenvalues.iter().map(|&x| fmt_f64(x)));
        row.push(out_of_band.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"))
}

/// Writes preset entries without the validation that rejects zero couplings.
fn decoupled_entries(
    preset: Preset,
    params: &BTreeMap<String, f64>,
    diag: &mut [f64],
    off: &mut [f64],
) -> Result<(), CliError> {
    let ell = diag.len();
    let p = |name: &str| params.get(name).copied().unwrap_or(0.0);
    let (la, lb, ra, rb): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) = match preset {
        Preset::TwoEdge => (vec![p("x")], vec![p("y")], vec![p("x")], vec![p("y")]),
        Preset::DeepEdge => (
            vec![0.0, 0.0],
            vec![p("x"), p("y")],
            vec![0.0, 0.0],
            vec![p("y"), p("x")],
        ),
        Preset::Asymmetric => (vec![p("x")], vec![p("y")], vec![p("z")], vec![1.0]),
    };
    if la.len() + ra.len() >= ell {
        return Err(CliError::Validation(format!(
            "dimension {ell} too small for preset {preset}"
        )));
    }
    diag[..la.len()].copy_from_slice(&la);
    off[..lb.len()].copy_from_slice(&lb);
    diag[ell - ra.len()..].copy_from_slice(&ra);
    off[ell - 1 - rb.len()..].copy_from_slice(&rb);
    Ok(())
}

/// CSV `k, rho` rows followed by an `integral, <trapezoid value>` row.
pub fn cmd_dos(spec: &MatrixSpec, samples: usize) -> Result<String, CliError> {
    let m = spec.build()?;
    let bp = BoundaryPolynomials::build(&normalize(&m)?)?;
    let curve = dos_curve(&bp, samples)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "rho"]).expect("in-memory write");
    for &(k, rho) in &curve {
        w.write_record([fmt_f64(k), fmt_f64(rho)])
            .expect("in-memory write");
    }
    w.write_record(["integral".to_string(), fmt_f64(trapezoid(&curve))])
        .expect("in-memory write");
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"))
}

/// Entry point for the binary: parses `std::env::args`, runs, and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("qut: {e}");
            e.exit_code()
        }
    }
}

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::case_file::{load_case, CaseFormat, ParsedCase};
use super::report::{emit_report, monte_carlo_samples_csv, AngleUnit, MonteCarloSummary, ReportFormat, RunOutput};
use crate::solvers::{self, Method, SolverConfig};
use crate::stochastic::{run_monte_carlo, MonteCarloConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qpf", version, about = "Quantum (HHL) fast-decoupled power flow on a statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one power flow and print the report as JSON.
    Solve(SolveArgs),
    /// Correlated Monte Carlo study over the case's uncertainty block.
    Montecarlo(MonteCarloArgs),
    /// Qubit counts needed to run QPF on a case.
    Resources(ResourceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Matpower,
}

#[derive(Debug, Args)]
struct CaseArgs {
    /// Case file (.json native, .m MATPOWER).
    #[arg(long)]
    case: PathBuf,
    /// Override format detection from the file extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Mismatch tolerance in per unit.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long = "clock-qubits", default_value_t = 4)]
    clock_qubits: usize,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value = "qpf", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report angles in degrees instead of radians.
    #[arg(long)]
    degrees: bool,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "fd", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = crate::stochastic::DEFAULT_BINS)]
    bins: usize,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-sample injections and voltages as CSV.
    #[arg(long = "samples-csv")]
    samples_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResourceArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long = "clock-qubits", default_value_t = 4)]
    clock_qubits: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

struct Failure(i32, String);

fn input_error(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_INPUT, msg.to_string())
}

impl SolverArgs {
    fn config(&self, method: Method) -> Result<SolverConfig, Failure> {
        if !(self.tol > 0.0) {
            return Err(input_error(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(input_error("--max-iter must be at least 1"));
        }
        if self.clock_qubits == 0 {
            return Err(input_error("--clock-qubits must be at least 1"));
        }
        Ok(SolverConfig::new(method)
            .with_tolerance(self.tol)
            .with_max_iterations(self.max_iter)
            .with_clock_qubits(self.clock_qubits))
    }
}

fn load(args: &CaseArgs, err: &mut dyn Write) -> Result<ParsedCase, Failure> {
    let format = args.format.map(|f| match f {
        FormatArg::Json => CaseFormat::NativeJson,
        FormatArg::Matpower => CaseFormat::Matpower,
    });
    let parsed = load_case(&args.case, format).map_err(|e| input_error(format!("{}: {e}", args.case.display())))?;
    for w in &parsed.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(parsed)
}

fn write_to(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| input_error(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| input_error(format!("cannot write output: {e}"))),
    }
}

fn solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let config = args.solver.config(args.method)?;
    let parsed = load(&args.case, err)?;
    let report = solvers::solve(&parsed.case, &config).map_err(input_error)?;
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {}", serde_json::to_string(w).unwrap_or_default());
    }
    let converged = report.converged;
    if let Some(d) = &report.diagnostic {
        let _ = writeln!(err, "{d}");
    }
    let unit = if args.degrees { AngleUnit::Degrees } else { AngleUnit::Radians };
    let output = RunOutput::new(&parsed.case, report, unit);
    if let Some(path) = &args.trace {
        write_to(Some(path), &emit_report(&output, ReportFormat::CsvTrace), out)?;
    }
    write_to(args.out.as_deref(), &emit_report(&output, ReportFormat::Json), out)?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn montecarlo(args: &MonteCarloArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if args.samples == 0 {
        return Err(input_error("--samples must be at least 1"));
    }
    if args.bins == 0 {
        return Err(input_error("--bins must be at least 1"));
    }
    let solver = args.solver.config(args.method)?;
    let parsed = load(&args.case, err)?;
    let spec = parsed
        .uncertainty
        .ok_or_else(|| input_error(format!("{} has no uncertainty block", args.case.case.display())))?;
    let mut config = MonteCarloConfig::new(args.samples, args.seed, solver);
    config.bins = args.bins;
    let result = run_monte_carlo(&parsed.case, &spec, &config).map_err(input_error)?;
    if let Some(path) = &args.samples_csv {
        write_to(Some(path), &monte_carlo_samples_csv(&result), out)?;
    }
    let summary = MonteCarloSummary::new(&parsed.case, args.method, &result);
    write_to(args.out.as_deref(), &summary.to_json(), out)?;
    if result.non_converged() > 0 {
        let _ = writeln!(err, "{} of {} samples did not converge", result.non_converged(), result.samples);
    }
    Ok(if result.converged_count == 0 { EXIT_NOT_CONVERGED } else { EXIT_OK })
}

fn resources(args: &ResourceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if args.clock_qubits == 0 {
        return Err(input_error("--clock-qubits must be at least 1"));
    }
    let parsed = load(&args.case, err)?;
    let config = SolverConfig::new(Method::Qpf).with_clock_qubits(args.clock_qubits);
    let report = solvers::resource_estimate(&parsed.case, &config);
    let mut s = serde_json::to_string_pretty(&report).expect("resource report serializes");
    s.push('\n');
    write_to(None, &s, out)?;
    Ok(EXIT_OK)
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code: 0 success, 1 non-convergence, 2 input error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a, out, err),
        Command::Montecarlo(a) => montecarlo(a, out, err),
        Command::Resources(a) => resources(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

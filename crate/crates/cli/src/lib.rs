//! Command-line front end for `rtscatter`: square-well transmission
//! with and without Kostin dissipation.
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 solver
//! non-convergence, 3 I/O. `validate` exits with the number of failed
//! criteria.

mod commands;
mod record;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rtscatter::error::Error;

#[derive(Parser, Debug)]
#[command(name = "rtscatter", version, about = "1-D square-well scattering with Kostin dissipation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dissipationless closed-form coefficients and resonances
    Analytic(AnalyticArgs),
    /// Closed form vs both numeric formulations for one problem
    Solve(SolveArgs),
    /// Transmission table over an energy grid
    Sweep(SweepArgs),
    /// Analytic and numeric transparency resonances in an energy range
    Resonances(SweepArgs),
    /// Run the acceptance criteria; exit code = number of failures
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
struct WellArgs {
    /// Well depth V (interior potential is -V)
    #[arg(short = 'V', long)]
    depth: f64,
    /// Well width L
    #[arg(short = 'L', long)]
    width: f64,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Integration step [default: L/1000]
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    newton_tol: f64,
    #[arg(long, default_value_t = 50)]
    max_newton_iters: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RecordFormat {
    Text,
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct AnalyticArgs {
    /// Incident energy E
    #[arg(short = 'E', long)]
    energy: f64,
    #[command(flatten)]
    well: WellArgs,
    /// Upper end of the resonance listing [default: 2E]
    #[arg(long)]
    e_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = RecordFormat::Text)]
    format: RecordFormat,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(short = 'E', long)]
    energy: f64,
    #[command(flatten)]
    well: WellArgs,
    /// Dissipation constant
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = RecordFormat::Text)]
    format: RecordFormat,
    /// Write the complex-field interior profile (x, re_phi, im_phi, rho, s, invariant)
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    well: WellArgs,
    #[arg(long)]
    e_min: f64,
    #[arg(long)]
    e_max: f64,
    /// Number of grid energies
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Dissipation constants, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    nu: Vec<f64>,
    /// Subset of analytic,closed_form,numeric (or all)
    #[arg(long, default_value = "all")]
    methods: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Output file [default: stdout]
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Solver step is L / step_divisor
    #[arg(long, default_value_t = 1000.0)]
    step_divisor: f64,
    /// Extra step refinement for criteria without a stated step (2-7)
    #[arg(long, default_value_t = 4.0)]
    oracle_refinement: f64,
    #[arg(long, default_value_t = 1e-12)]
    newton_tol: f64,
    #[arg(long, default_value_t = 50)]
    max_newton_iters: usize,
    /// Random cases for criteria 2 and 3
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Run a single criterion
    #[arg(long)]
    only: Option<u8>,
    /// Write hydrodynamic profiles and conservation residuals here
    #[arg(long)]
    profile_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tol_resonance_analytic: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_resonance_numeric: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_equivalence: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_flux_numeric: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol_flux_analytic: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_collapse: f64,
    #[arg(long, default_value_t = 2.5)]
    order_ratio_min: f64,
    #[arg(long, default_value_t = 6.0)]
    order_ratio_max: f64,
    #[arg(long, default_value_t = 10.0)]
    resonance_nu_factor: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_conservation: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_flux_identity: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_agreement: f64,
    #[arg(long, default_value_t = 16.0)]
    step_ratio: f64,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        e if e.is_solver_failure() => 2,
        _ => 1,
    }
}

/// Parse `args` (program name first), run, and return the exit code.
/// Table and record output goes to `out` unless an output file is given.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Analytic(a) => commands::analytic(&a, out),
        Command::Solve(a) => commands::solve(&a, out),
        Command::Sweep(a) => commands::sweep(&a, out),
        Command::Resonances(a) => commands::resonances(&a, out),
        Command::Validate(a) => commands::validate(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

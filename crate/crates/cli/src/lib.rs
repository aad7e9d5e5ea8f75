//! The `qvi` command-line tool.

mod commands;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "qvi", version, about = "Solve quasi-variational inequalities with translated constraint sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an iterative solver.
    Solve(SolveArgs),
    /// Integrate the discretized sweeping process.
    Sweep(SweepArgs),
    /// Report Lipschitz and monotonicity constants.
    Analyze(AnalyzeArgs),
    /// Find a zero of f with the derivative-free preconditioned iteration.
    Zero(ZeroArgs),
    /// Print a problem as JSON.
    Show(ShowArgs),
    /// List the built-in problems.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// Projection in y = x - v(x) followed by (Id - v)^-1.
    Alg1,
    /// Forward-backward-forward splitting in y.
    Tseng,
    /// Projection onto the moving set K(x).
    Catchup,
    /// Preconditioned zero finder (zero problems only).
    Alg3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    SemiImplicit,
    CatchingUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimate {
    #[value(name = "L")]
    BigL,
    #[value(name = "l")]
    SmallL,
    #[value(name = "l_tilde")]
    LTilde,
    Gamma,
    Mu,
    Pseudo,
    All,
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    /// Problem file path or builtin:NAME.
    #[arg(long, short = 'p')]
    pub problem: String,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Starting point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    /// Stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// CSV trace of iterates and residuals.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, short = 'a', value_enum, default_value = "alg1")]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub run: RunArgs,
    /// Step size: "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    pub h: String,
    /// Seed for sampled constants.
    #[arg(long, env = "QVI_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Use the update x+ = (Id - v)^-1(y + h (f(x) - f(z))) in the Tseng solver.
    #[arg(long)]
    pub literal_tseng: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long)]
    pub h: f64,
    /// Final time.
    #[arg(long = "T", alias = "t-end")]
    pub t_end: f64,
    #[arg(long, value_enum, default_value = "semi-implicit")]
    pub scheme: Scheme,
    /// CSV of t, x1..xn, speed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[arg(long, value_enum, default_value = "all")]
    pub estimate: Estimate,
    #[arg(long, env = "QVI_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled pairs.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ZeroArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    #[command(flatten)]
    pub problem: ProblemArg,
}

/// Parses `args` (including the program name) and runs the command, writing
/// to the given streams. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
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
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    ExitCode::Usage as i32
                }
            };
        }
    };
    match commands::execute(&cli.command, out) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::Usage as i32
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

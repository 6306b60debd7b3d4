mod config;
mod error;
mod eval;
mod output;
mod simulate;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

/// Gamma subordinator, its inverse and the associated non-local equations.
#[derive(Debug, Parser)]
#[command(name = "invgamma", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Shape rate a of the gamma subordinator.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Scale b of the gamma subordinator.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Flat key=value file; flags take precedence over its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path (default: $INVGAMMA_OUT_DIR/<command>-<name>.csv, else stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pass tolerance applied to every verification check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Absolute tolerance of adaptive quadrature.
    #[arg(long = "abs-tol", global = true)]
    pub abs_tol: Option<f64>,
    /// Relative tolerance of adaptive quadrature.
    #[arg(long = "rel-tol", global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long = "max-subdivisions", global = true)]
    pub max_subdivisions: Option<usize>,
    /// Tail tolerance of infinite series.
    #[arg(long = "series-tol", global = true)]
    pub series_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a function on the Cartesian product of its input grids.
    Eval(eval::EvalArgs),
    /// Run a verification suite: laplace, sonine, moments, operators, relaxation or all.
    Verify(verify::VerifyArgs),
    /// Monte Carlo: gamma-path, inverse-cdf, inverse-moments or brownian-timechange.
    Simulate(simulate::SimulateArgs),
    /// Solve space-nonlocal, time-nonlocal, abel or relaxation problems on a grid.
    Solve(solve::SolveArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let name = match &cli.command {
        Command::Eval(a) => format!("eval {}", a.function),
        Command::Verify(a) => format!("verify {}", a.suite),
        Command::Simulate(a) => format!("simulate {}", a.target),
        Command::Solve(a) => format!("solve {}", a.problem),
    };
    let cfg = RunConfig::resolve(&cli.global, name)?;
    match &cli.command {
        Command::Eval(a) => eval::run(&cfg, a),
        Command::Verify(a) => verify::run(&cfg, a),
        Command::Simulate(a) => simulate::run(&cfg, a),
        Command::Solve(a) => solve::run(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("invgamma: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `hvexp`: norms, operator images, bound constants, sweeps and verification
//! suites driven by JSON experiment configs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "hvexp", version, about = "Hausdorff operators on variable-exponent spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; `.csv` writes CSV, anything else JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Space norm of the first configured function.
    Norm(Common),
    /// Operator image of the configured functions on the dyadic radius grid.
    Apply(Common),
    /// Bound constants as JSON.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        which: Option<String>,
    },
    /// Sharpness sweep over the extremal family.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        which: Option<String>,
        /// Comma-separated decreasing ε values.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Run a verification suite; exit 1 when a check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        which: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random samples.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    Invariants,
    Upper,
    Sharpness,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Norm(common) => commands::norm(&common),
        Command::Apply(common) => commands::apply(&common),
        Command::Constants { common, which } => commands::constants(&common, which.as_deref()),
        Command::Sweep { common, which, eps } => commands::sweep(&common, which.as_deref(), eps.as_deref()),
        Command::Verify {
            common,
            suite,
            which,
            seed,
            n,
            eps,
        } => commands::verify(&common, suite, which.as_deref(), seed, n, eps.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hvexp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

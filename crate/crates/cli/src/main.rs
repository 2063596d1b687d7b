//! `trimclass`: trimmed classification errors, penalized trimming-level and
//! model selection, bound verification suites, and contaminated data
//! generation.
//!
//! Exit codes: 0 success, 1 verification assertion failure, 2 usage or input
//! error.

mod commands;
mod config;
mod data;
mod jsonfmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("one or more verification assertions failed")]
    AssertionFailure,
}

#[derive(Parser)]
#[command(name = "trimclass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plain and trimmed empirical errors of a classifier over the trimming grid
    TrimError(CommonArgs),
    /// Jointly select the trimming level and prefix family by penalized risk
    Select(CommonArgs),
    /// Run a numerical verification suite for the underlying bounds
    Verify(CommonArgs),
    /// Generate and save a contaminated dataset with recorded ground truth
    Simulate(CommonArgs),
}

/// Flags shared by all subcommands; any value can also come from --config
/// (key=value lines), with flags taking precedence.
#[derive(Args)]
struct CommonArgs {
    /// Input CSV with a header row
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label column, by name or zero-based index (default: "label")
    #[arg(long)]
    label: Option<String>,
    /// Largest admissible trimming level (default 0.25)
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Largest prefix family to consider (default: all feature columns)
    #[arg(long)]
    max_m: Option<usize>,
    /// Base seed for all randomness (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Trainer: sweep | enum | stochastic | auto (default auto)
    #[arg(long)]
    trainer: Option<String>,
    /// Verification suite: bias | concentration | lipschitz | threshold |
    /// oracle-single | oracle-joint | equivalence | all (default all)
    #[arg(long)]
    suite: Option<String>,
    /// Monte Carlo replications for verification suites
    #[arg(long)]
    reps: Option<usize>,
    /// Output path (JSON; simulate writes CSV plus a JSON sidecar)
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(
            self.config.as_deref(),
            &[
                ("input", self.input.as_ref().map(|p| p.display().to_string())),
                ("label", self.label.clone()),
                ("alpha_max", self.alpha_max.map(|v| v.to_string())),
                ("max_m", self.max_m.map(|v| v.to_string())),
                ("seed", self.seed.map(|v| v.to_string())),
                ("trainer", self.trainer.clone()),
                ("suite", self.suite.clone()),
                ("reps", self.reps.map(|v| v.to_string())),
                ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ],
        )
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = |args: &CommonArgs, f: fn(&RunConfig) -> Result<(), CliError>| {
        args.resolve().and_then(|cfg| f(&cfg))
    };
    let outcome = match &cli.command {
        Command::TrimError(args) => run(args, commands::cmd_trim_error),
        Command::Select(args) => run(args, commands::cmd_select),
        Command::Verify(args) => run(args, commands::cmd_verify),
        Command::Simulate(args) => run(args, commands::cmd_simulate),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::AssertionFailure) => {
            eprintln!("error: {}", CliError::AssertionFailure);
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

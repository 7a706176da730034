//! `contain`: batch front-end for the fault-containment simulator.
//!
//! Exit status is 0 on success, 1 when a run diverged or an asserted
//! invariant or acceptance check failed, and 2 for usage and config errors.

mod commands;
mod config;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contain_core::{EngineError, ExperimentError, GraphError, MarkovError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) | CliError::Engine(EngineError::Divergence { .. }) => 1,
            CliError::Experiment(ExperimentError::Engine(EngineError::Divergence { .. })) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "contain", version, about = "Fault-containment experiments for self-stabilizing protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chain expectations, variances and closed-form bounds for d = 1..=D, as CSV.
    Analyze(commands::AnalyzeArgs),
    /// Run the trials described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulated containment times next to the chain predictions, with z-scores.
    Compare(commands::CompareArgs),
    /// Write a generated graph as an edge list.
    Graphgen(commands::GraphgenArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => commands::analyze(&args),
        Command::Simulate { config } => {
            let cfg = config::ExperimentConfig::load(&config)?;
            let summary = simulate::simulate(&cfg)?;
            println!("{}", simulate::describe(&summary, &config));
            if summary.is_clean() {
                Ok(())
            } else {
                Err(CliError::Violation(format!(
                    "{} divergent trial(s); violations: radius {}, containment {}, sender changed {}",
                    summary.divergent,
                    summary.violations.radius,
                    summary.violations.containment,
                    summary.violations.sender_changed
                )))
            }
        }
        Command::Compare(args) => commands::compare(&args),
        Command::Graphgen(args) => commands::graphgen(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

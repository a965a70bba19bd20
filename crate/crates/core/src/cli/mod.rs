//! Command-line front end behind the `qoslink` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 infeasible or unstable analytics, 4 Monte Carlo disagreement.

pub mod analyze;
pub mod config;
pub mod sweep;
pub mod validate;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::Config;
pub use sweep::Figure;

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "qoslink", version, about = "Effective bandwidth / effective capacity analysis of a fixed-rate fading link")]
pub struct Cli {
    /// Seed for every randomized command; overrides `sim.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the closed-form link report (JSON) for the configured source.
    Analyze,
    /// Write the CSV data behind one figure.
    #[command(after_help = sweep::CSV_HELP)]
    Sweep {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the closed forms against Monte Carlo (JSON report).
    Validate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Analytic(String),
    #[error("validation failed: {0}")]
    Oracle(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Analytic(_) => 3,
            CliError::Oracle(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Analytic(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_config(cli: &Cli, required: bool) -> Result<Config, CliError> {
    match &cli.config {
        Some(path) => Config::load(path),
        None if required => Err(CliError::Config("--config <path> is required for this command".into())),
        None => Ok(Config::default()),
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze => {
            let report = analyze::analyze(&load_config(cli, true)?)?;
            writeln!(out, "{}", to_json(&report)?)?;
        }
        Command::Sweep { figure, out: path } => {
            let table = sweep::sweep(*figure, &load_config(cli, false)?)?;
            let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            table.write_csv(file)?;
            writeln!(out, "wrote {} rows to {}", table.rows.len(), path.display())?;
        }
        Command::Validate => {
            let report = validate::validate(&load_config(cli, true)?, cli.seed)?;
            writeln!(out, "{}", to_json(&report)?)?;
            if !report.passed {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
                return Err(CliError::Oracle(format!("checks failed: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))
}

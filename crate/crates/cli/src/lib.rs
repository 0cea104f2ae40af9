//! Command line harness: generate or load a dataset, run a detector or a
//! full sweep, and write plot-ready results under an output directory.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input data.
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "flowdpc",
    version,
    about = "Density peaks anomaly detection for network flows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration; missing keys take their defaults.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set dpc.d_c=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// More log output; repeat for debug.
    #[arg(long, short, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct WithOutput {
    #[command(flatten)]
    pub common: Common,
    /// Directory for all written files; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the configured synthetic dataset as CSV.
    Synth(WithOutput),
    /// Run one detector on the configured dataset and score it.
    Detect(WithOutput),
    /// Run every method and setting across data volumes.
    Sweep(WithOutput),
    /// Check the configuration and print it with defaults filled in.
    Validate(Common),
}

impl Command {
    pub fn verbosity(&self) -> u8 {
        match self {
            Command::Synth(o) | Command::Detect(o) | Command::Sweep(o) => o.common.verbose,
            Command::Validate(c) => c.verbose,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(o) => commands::synth(&o),
        Command::Detect(o) => commands::detect(&o),
        Command::Sweep(o) => commands::sweep(&o),
        Command::Validate(c) => commands::validate(&c),
    }
}

//! Command-line entry points for the splitting solver: time-marching runs,
//! convergence studies, kernel scaling scans, and dissipation audits, each
//! driven by a strict JSON configuration and writing reproducible artifacts.
//!
//! Exit codes: 0 = pass, 1 = scientific check failed, 2 = usage or config
//! error, 3 = runtime failure.

mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::ConfigFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "chsplit",
    version,
    about = "Pseudo-spectral splitting solver for the 1D periodic Cahn-Hilliard equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the run artifacts
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Time-march the configured scheme, writing diagnostics and snapshots
    Run(CommonArgs),
    /// Convergence-order study against a self-converged reference
    Converge(CommonArgs),
    /// Kernel norm scaling scan over a beta ladder
    #[command(name = "kernel-scan")]
    KernelScan(CommonArgs),
    /// Per-step energy dissipation audit
    Dissipation(CommonArgs),
}

type CommandRunner = fn(
    &ConfigFile,
    &std::path::Path,
) -> Result<(artifact::Verdict, artifact::RunArtifact), CliError>;

fn dispatch(command: &Command) -> Result<artifact::Verdict, CliError> {
    let (args, runner): (&CommonArgs, CommandRunner) = match command {
        Command::Run(a) => (a, commands::cmd_run),
        Command::Converge(a) => (a, commands::cmd_converge),
        Command::KernelScan(a) => (a, commands::cmd_kernel_scan),
        Command::Dissipation(a) => (a, commands::cmd_dissipation),
    };
    let config = ConfigFile::load(&args.config)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let (verdict, art) = runner(&config, &args.out)?;
    println!("verdict: {} ({})", verdict.label(), art.describe());
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(verdict) => ExitCode::from(verdict.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `feec`: configuration-driven experiments on top of `feec-core`.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feec_core::FeecError;
use thiserror::Error;

/// Output directories in configs are resolved against this variable when set.
pub const OUTPUT_ROOT_VAR: &str = "FEEC_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", if *line == 0 { format!("config: {msg}") } else { format!("config line {line}: {msg}") })]
    Parse { line: usize, msg: String },
    /// Unreadable or malformed input file.
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Runtime(#[from] FeecError),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse { line, msg: msg.into() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "feec", version, about = "FEEC a posteriori estimator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop (or a parameter sweep) described by a config file.
    Run { config: String },
    /// Compare CG iteration counts without, with Jacobi and with auxiliary-space preconditioning.
    PrecondBench { config: String },
    /// Print simplex counts, Euler characteristic and shape regularity of a mesh
    /// file or a generator spec such as `unit-cube:2`.
    MeshInfo { spec: String },
    /// List the problem registry.
    ListProblems,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => commands::run(&config),
        Command::PrecondBench { config } => commands::precond_bench(&config),
        Command::MeshInfo { spec } => commands::mesh_info(&spec),
        Command::ListProblems => commands::list_problems(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Pipeline entry point.
//!
//! Stages communicate only through files; rerunning a command with the
//! same flags and seeds rewrites the same bytes. Exit codes: 0 success,
//! 1 usage error, 2 missing or corrupt artifact, 3 training divergence,
//! 4 model incompatibility.

mod args;
mod commands;
mod config;

use args::{Cli, Command};
use clap::error::ErrorKind;
use clap::Parser;
use config::Ctx;
use goldbach_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Artifact(String),
    Diverged(String),
    Incompatible(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Artifact(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Incompatible(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Artifact(m)
            | CliError::Diverged(m)
            | CliError::Incompatible(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Artifact(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_)
            | CoreError::OutOfRange(_)
            | CoreError::InsufficientSieve { .. } => CliError::Usage(e.to_string()),
            CoreError::Io(_) | CoreError::Parse { .. } | CoreError::ModelLoad(_) => {
                CliError::Artifact(e.to_string())
            }
            CoreError::TrainingDiverged { .. } => CliError::Diverged(e.to_string()),
            CoreError::IncompatibleModel(_) => CliError::Incompatible(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        goldbach_core::set_max_threads(threads);
    }
    let ctx = Ctx::new(cli.config.as_deref(), cli.data_dir)?;
    match cli.command {
        Command::Comet(a) => commands::cmd_comet(&ctx, a),
        Command::Split(a) => commands::cmd_split(&ctx, a),
        Command::Train(a) => commands::cmd_train(&ctx, a),
        Command::Eval(a) => commands::cmd_eval(&ctx, a),
        Command::Compare(a) => commands::cmd_compare(&ctx, a),
        Command::DepthSweep(a) => commands::cmd_depth_sweep(&ctx, a),
        Command::Ablate(a) => commands::cmd_ablate(&ctx, a),
        Command::Search(a) => commands::cmd_search(&ctx, a),
        Command::Scan(a) => commands::cmd_scan(&ctx, a),
        Command::Plot(a) => commands::cmd_plot(&ctx, a),
        Command::Crt(a) => commands::cmd_crt(&ctx, a),
        Command::Features(a) => commands::cmd_features(&ctx, a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

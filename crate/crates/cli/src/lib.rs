//! Command-line driver for `asep-core`: evaluates the formulas, runs the
//! oracles and identity checks, and prints versioned CSV or JSON tables.
//!
//! Exit codes: 0 when everything converged and every check passed, 1 for
//! usage errors (bad flags, config or model parameters), 2 for numerical
//! failure or a failed check. Tables are still printed with exit code 2.

pub mod args;
pub mod commands;
pub mod output;
pub mod parse;
pub mod settings;

use std::fs;

use asep_core::AsepError;
use thiserror::Error;

use args::{Cli, Command};
use commands::Outcome;
use parse::{parse_config, ConfigFile, ParseError};
use settings::Settings;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] AsepError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io { .. } => 1,
            CliError::Model(e) => match e {
                AsepError::InvalidParams(_)
                | AsepError::InvalidQuery(_)
                | AsepError::Precondition(_)
                | AsepError::TooLarge(_)
                | AsepError::WindowTooSmall(_)
                | AsepError::InfeasiblePlan(_) => 1,
                _ => 2,
            },
        }
    }
}

fn load_config(cli: &Cli) -> Result<ConfigFile, CliError> {
    match &cli.config {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(parse_config(&text)?)
        }
    }
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = load_config(cli)?;
    let (model, sampling) = match &cli.command {
        Command::Eval { model } => (model, &Default::default()),
        Command::Simulate { model, sampling, .. }
        | Command::Verify { model, sampling, .. }
        | Command::Compare { model, sampling, .. } => (model, sampling),
    };
    let settings = Settings::resolve(model, sampling, cli.threads, cli.format, &cfg)?;
    let go = || match &cli.command {
        Command::Eval { .. } => commands::eval(&settings),
        Command::Simulate { method, .. } => commands::simulate(*method, &settings),
        Command::Verify { suite, .. } => commands::verify(*suite, &settings),
        Command::Compare { oracle, .. } => commands::compare(*oracle, &settings),
    };
    match settings.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(go),
        None => go(),
    }
}

//! `herdsim` command-line front end.

pub mod commands;
pub mod config;

use std::process::ExitCode;

use thiserror::Error;

pub use config::{parse_config, parse_config_json, parse_config_str, to_table, ConfigError};

/// Overrides `--threads` when set.
pub const THREADS_ENV: &str = "HERDSIM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<herdsim_core::Error> for CliError {
    fn from(e: herdsim_core::Error) -> Self {
        use herdsim_core::Error as E;
        match e {
            E::Io(_) | E::NoConvergence { .. } | E::ConnectivityFailure { .. } | E::TooLarge { .. } => {
                CliError::Runtime(e.to_string())
            }
            E::NoResolvedTrials | E::TooShort { .. } | E::NeighborhoodTooLarge { .. } => {
                CliError::Runtime(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Prints the error and maps it to the process exit code.
pub fn finish(result: CliResult<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("herdsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Worker count: the environment wins over the flag.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        _ => match flag {
            Some(0) => Err(CliError::Usage("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

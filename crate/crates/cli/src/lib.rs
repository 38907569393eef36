//! Library behind the `tunneltime` binary: configuration, the five commands
//! and deterministic CSV/JSON output.
//!
//! Exit codes: 0 on success, 1 for I/O failures, 2 for configuration errors,
//! 3 when a numeric invariant fails.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric invariant violated: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<tunnel_core::Error> for CliError {
    fn from(e: tunnel_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Packet,
    Larmor,
    Resonance,
    Limits,
}

/// Runs `cmd` on `cfg` after applying the overrides.
pub fn run(cmd: Command, mut cfg: RunConfig, overrides: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    cfg.apply(overrides)?;
    match cmd {
        Command::Sweep => commands::sweep(&cfg),
        Command::Packet => commands::packet(&cfg),
        Command::Larmor => commands::larmor(&cfg),
        Command::Resonance => commands::resonance(&cfg),
        Command::Limits => commands::limits(&cfg),
    }
}

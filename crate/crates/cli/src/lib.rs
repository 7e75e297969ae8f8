//! Experiment runner behind the `ecpe` binary.
//!
//! Subcommands: `ingest`, `stats`, `split`, `run` and `report`. Each maps to
//! a function in [`commands`] so tests can drive them without a process.

pub mod commands;
pub mod config;
pub mod registry;

use std::fmt::Display;
use std::process::ExitCode;

/// A failure with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const FAILURE: u8 = 3;

    pub fn usage(message: impl Display) -> Self {
        CliError { code: Self::USAGE, message: message.to_string() }
    }

    pub fn data(message: impl Display) -> Self {
        CliError { code: Self::DATA, message: message.to_string() }
    }

    pub fn failure(message: impl Display) -> Self {
        CliError { code: Self::FAILURE, message: message.to_string() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

//! Command-line driver for `irsa-bac`: configuration, CSV tables and the
//! `simulate`, `analyze` and `threshold` subcommands.

use std::fmt;

pub mod commands;
pub mod config;
pub mod table;

pub use config::{Grid, RunConfig};
pub use table::Table;

/// Exit status for a bad configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a failure after validation.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

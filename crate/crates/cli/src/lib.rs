//! Command-line surface for the motion-planning stack: scenario files, run
//! orchestration, artifacts and plots.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod plot;

use std::fmt;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_PLANNING: u8 = 2;
pub const EXIT_RUN_FAILED: u8 = 3;

/// Error carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    /// Unreadable or unwritable files count as input errors.
    pub fn io(message: impl Into<String>) -> Self {
        Self::input(message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

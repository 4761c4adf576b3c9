//! Command-line front end for `fw-core`: run configured experiments, audit
//! traces against the convergence bounds, and sweep directories of configs.

pub mod commands;
pub mod config;

use std::fmt;

pub const EXIT_OK: u8 = 0;
/// Usage, config or trace/bound mismatch.
pub const EXIT_USAGE: u8 = 1;
/// Oracle, step-rule or I/O failure during a run.
pub const EXIT_RUNTIME: u8 = 2;
/// A bound was violated.
pub const EXIT_VIOLATION: u8 = 3;

/// An error carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: message.into() }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VIOLATION, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

//! Error channel for the command-line surface.
//!
//! Every failure is sorted into one of two buckets that map straight to
//! process exit codes: problems with user-supplied inputs (config files,
//! data files, flag combinations) exit with code 2, and failures inside
//! the estimation pipeline or while writing results exit with code 3.

use std::fmt;

/// A command failure with its exit-code class.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit code 2). Messages carry
    /// line numbers whenever the source is a file.
    Schema(String),
    /// Estimation or output failure (exit code 3).
    Pipeline(String),
}

impl CliError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Pipeline(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(msg) => write!(f, "schema error: {msg}"),
            CliError::Pipeline(msg) => write!(f, "pipeline error: {msg}"),
        }
    }
}

impl From<hal_curve::error::Error> for CliError {
    fn from(e: hal_curve::error::Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

/// Shorthand result used across the CLI modules.
pub type CliResult<T> = Result<T, CliError>;

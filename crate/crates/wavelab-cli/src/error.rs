//! Errors of the command line front end.

use thiserror::Error;

/// Failures that end a command with a usage or input error.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed scenario text; line and column are 1-based, 0 when the
    /// problem is a missing entry.
    #[error("line {line}, column {col}: {msg}")]
    Parse {
        /// Line of the offending entry.
        line: usize,
        /// Column of the offending token.
        col: usize,
        /// Description.
        msg: String,
    },
    /// A well formed scenario that cannot be run.
    #[error("infeasible scenario: {0}")]
    Scenario(String),
    /// Malformed saved log or table.
    #[error("{0}")]
    Input(String),
    /// Error raised by the solvers.
    #[error(transparent)]
    Solver(#[from] wavelab::Error),
    /// File system error.
    #[error("{path}: {source}")]
    Io {
        /// Path involved.
        path: String,
        /// Underlying error.
        source: std::io::Error,
    },
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a path to an I/O error.
pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

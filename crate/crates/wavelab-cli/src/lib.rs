//! Scenario files, run orchestration and machine-readable outputs for the
//! wavelab solvers.

pub mod commands;
pub mod error;
pub mod number;
pub mod output;
pub mod scenario;

pub use error::{CliError, Result};

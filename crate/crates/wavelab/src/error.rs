//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the solvers and by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An envelope or Riemann problem was requested on an interval of zero width.
    #[error("degenerate interval [{0}, {0}]")]
    Degenerate(i64),
    /// A grid index lies outside the domain of the sampled function.
    #[error("grid index {index} outside domain [{lo}, {hi}]")]
    OutOfDomain { index: i64, lo: i64, hi: i64 },
    /// A real value does not sit on the value grid.
    #[error("value {0} is not on the value grid")]
    OffGrid(f64),
    /// Malformed sampled function (too few samples, bad step, non finite values).
    #[error("invalid piecewise affine function: {0}")]
    InvalidFunction(String),
    /// Malformed initial datum.
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    /// The flux violates the speed normalization required by the Glimm scheme.
    #[error("flux slope {slope} on cell ending at index {cell} is outside (0, 1)")]
    SpeedNormalization { cell: i64, slope: f64 },
    /// A query point lies outside the jump of a Riemann problem.
    #[error("state index {0} is outside the Riemann jump")]
    OutsideJump(i64),
    /// Parameters outside the admissible range of a construction.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;

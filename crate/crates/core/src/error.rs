//! Error type shared by every module in the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// All failure modes of the library surface.
///
/// The CLI maps these onto process exit codes, so the variants separate
/// caller mistakes (`Config`, `Usage`), bad data (`Dimension`, `Validation`,
/// `Structural`) and numerical breakdown (`Numeric`, `Training`).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Incompatible tensor shapes; names both offending shapes.
    Dimension(String),
    /// Invalid hyperparameter or layer plan.
    Config(String),
    /// Input data violates a documented precondition.
    Validation(String),
    /// An API was driven incorrectly (e.g. backward from a non-scalar).
    Usage(String),
    /// Numerical failure: non-convergent eigensolve, degenerate statistics.
    Numeric(String),
    /// Training diverged; carries the last finite loss seen.
    Training { message: String, last_finite_loss: f64 },
    /// Architecture mutation would break a structural invariant.
    Structural(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(m) => write!(f, "dimension error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Validation(m) => write!(f, "validation error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Training { message, last_finite_loss } => {
                write!(f, "training error: {message} (last finite loss {last_finite_loss})")
            }
            Error::Structural(m) => write!(f, "structural error: {m}"),
        }
    }
}

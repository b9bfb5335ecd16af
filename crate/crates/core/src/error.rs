//! Error type shared by every module of the simulator.

use thiserror::Error;

/// Errors raised by the simulation library.
///
/// `Domain` covers inputs outside an operation's mathematical domain,
/// `Precondition` covers call-ordering violations (for example asking for a
/// spectrum quote when the optical link already meets the rate target),
/// `Numeric` covers convergence failures of the in-crate solvers, and the
/// parse/validation variants carry enough location detail to point at the
/// offending file line or configuration key.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {name} = {value} {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The operation was invoked in a state it is not defined for.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative numeric routine failed to converge.
    #[error("numeric failure in {what}: {detail}")]
    Numeric { what: &'static str, detail: String },

    /// A parameter combination pushed an intermediate value out of f64 range.
    #[error("numeric range exceeded in {what}: {detail}")]
    NumericRange { what: &'static str, detail: String },

    /// Malformed input data, with a 1-based line number when available.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input that violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Configuration file or override could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

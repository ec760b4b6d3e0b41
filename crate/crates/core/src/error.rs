use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the model, the solvers and the analyses built on them.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or trace does not have the length the chain requires.
    DimensionMismatch { expected: usize, actual: usize },
    /// A scalar argument lies outside the interval an operation accepts.
    Domain { what: &'static str, value: f64 },
    /// An iterative solver ran out of iterations.
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    /// A linear system was singular to working precision.
    Singular,
    /// The exact stationary oracle was asked for a chain that is too long.
    TooLarge { n: usize, max: usize },
    /// A throughput trace cannot be normalized by its anchor pair.
    Normalization,
    /// A requested emission coefficient is not reachable with the frame bounds.
    Unreachable { alpha: f64, min: f64, max: f64 },
    /// Every evaluation of a least-squares objective failed.
    FitFailed,
    /// A state or configuration breaks a structural invariant.
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
            Error::Singular => f.write_str("singular linear system"),
            Error::TooLarge { n, max } => {
                write!(
                    f,
                    "chain of {n} pairs exceeds the exact oracle limit of {max}"
                )
            }
            Error::Normalization => f.write_str("first pair rate must be positive"),
            Error::Unreachable { alpha, min, max } => write!(
                f,
                "alpha {alpha} not reachable, achievable interval is ({min}, {max})"
            ),
            Error::FitFailed => f.write_str("every objective evaluation failed"),
            Error::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

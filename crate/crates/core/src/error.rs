use thiserror::Error;

/// Errors produced by the pricing, quadrature, simulation and order-book routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid, policy or run configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A quadrature or recursion produced a non-finite sample or failed a mass check.
    #[error("numerical error: {message} (at {location})")]
    Numerical { message: String, location: String },

    /// A recursion query fell outside the tabulated moneyness range.
    #[error("extrapolation error: moneyness {moneyness} outside [{lo}, {hi}] at level {level}")]
    Extrapolation {
        moneyness: f64,
        lo: f64,
        hi: f64,
        level: usize,
    },

    /// The extracted density lost or gained too much probability mass.
    #[error(
        "grid resolution error: density mass {mass:.6} deviates from 1 by more than 1%; refine or widen the cost grid"
    )]
    GridResolution { mass: f64 },

    /// A market order is larger than the displayed book.
    #[error("insufficient depth: requested {requested} shares, at most {available} fillable")]
    InsufficientDepth { requested: f64, available: f64 },

    /// Book snapshot violates its structural invariants.
    #[error("invalid book: {0}")]
    InvalidBook(String),

    /// Order-flow rates do not admit a nonnegative stationary book.
    #[error("model validity error: {0}")]
    ModelValidity(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(message: impl Into<String>, location: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            location: location.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than numerics or data depth.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::InvalidBook(_) | Error::Parse(_) | Error::ModelValidity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

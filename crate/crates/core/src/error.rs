use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An exact enumeration would exceed its configured size cap.
    #[error("exact enumeration of {what} needs {required} items, above the cap of {cap}")]
    ExactEnumerationLimit {
        what: &'static str,
        required: f64,
        cap: f64,
    },

    #[error("envelope must be positive, got {0}")]
    InvalidEnvelope(f64),

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("uniform deviation needs population means, but the class carries none")]
    MissingPopulationMeans,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Every row of the class is zero on the sample, so no scale `c > 0` exists.
    #[error("class is degenerate: all empirical norms are zero")]
    DegenerateClass,

    #[error("radius {radius} is not admissible (must satisfy 0 < radius < {limit})")]
    InvalidRadius { radius: f64, limit: f64 },

    /// A verified inequality failed; `details` carries the serialized instance.
    #[error("inequality violated: {what} (lhs {lhs}, rhs {rhs}); instance: {details}")]
    InequalityViolation {
        what: String,
        lhs: f64,
        rhs: f64,
        details: String,
    },

    #[error("invariant violated: {what}; instance: {details}")]
    InvariantViolation { what: String, details: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

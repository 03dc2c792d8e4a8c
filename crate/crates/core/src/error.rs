use thiserror::Error;

/// Errors produced by scene loading, simulation and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// The configuration document could not be parsed or is missing a field.
    #[error("schema error: {0}")]
    Schema(String),

    /// A value violates a documented invariant; `field` names the offender.
    #[error("invalid {field}: {reason}")]
    Invariant { field: String, reason: String },

    /// Geometry outside the model's domain (coincident points, outside room, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("input too short: need at least {needed} values, got {actual}")]
    TooShort { needed: usize, actual: usize },

    /// Kurtosis is undefined for constant data.
    #[error("zero variance: kurtosis is undefined for constant samples")]
    ZeroVariance,

    #[error("unknown cell id {0}")]
    UnknownCell(u32),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invariant(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Invariant {
        field: field.into(),
        reason: reason.into(),
    }
}

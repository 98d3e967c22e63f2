use thiserror::Error;

/// Errors produced by the library. Every variant is a domain error: the
/// caller supplied something outside an operation's contract, or a numeric
/// routine hit a state it cannot recover from.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("normalization undefined: {0}")]
    DegenerateNormalization(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-hermitian accumulation: imaginary part {0:e} exceeds tolerance")]
    NonHermitian(f64),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSequence(_) => "invalid_sequence",
            Error::InvalidPattern(_) => "invalid_pattern",
            Error::OutOfRange(_) => "out_of_range",
            Error::Overflow(_) => "overflow",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidModel(_) => "invalid_model",
            Error::DegenerateNormalization(_) => "degenerate_normalization",
            Error::NonFinite(_) => "non_finite",
            Error::NonHermitian(_) => "non_hermitian",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

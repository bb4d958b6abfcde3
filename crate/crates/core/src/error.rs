use thiserror::Error;

/// Errors produced anywhere in the filtering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("feature dimension {requested} exceeds capacity {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("matrix is not positive semi-definite: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}")]
    PsdViolation { lambda_min: f64, lambda_max: f64 },

    #[error("series too short: need at least {needed} samples, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("integration diverged at step {step} (|x| = {magnitude:e})")]
    Divergence { step: usize, magnitude: f64 },

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Empty(_) => "empty",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange(_) => "index_out_of_range",
            Error::Capacity { .. } => "capacity",
            Error::PsdViolation { .. } => "psd_violation",
            Error::SeriesTooShort { .. } => "series_too_short",
            Error::Divergence { .. } => "divergence",
            Error::Conditioning(_) => "conditioning",
            Error::Format(_) => "format",
            Error::Csv { .. } => "csv",
            Error::Config(_) => "config",
            Error::MissingColumn(_) => "missing_column",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(context: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { context, value })
    }
}

pub(crate) fn check_all_finite(context: &'static str, values: &[f64]) -> Result<()> {
    values.iter().try_for_each(|&v| check_finite(context, v))
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by the link model, the searches and the experiment runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("element ({row}, {col}) is outside a {rows}x{cols} array")]
    InvalidElement {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("points coincide, direction is undefined")]
    CoincidentPoints,

    #[error("supply current {current:.6} A exceeds the per-unit budget of {max:.6} A")]
    SupplyBudget { current: f64, max: f64 },

    #[error("phase index {index} is not valid for a codebook with {size} entries")]
    InvalidPhaseIndex { index: usize, size: usize },

    #[error("control word {0} is not a valid SP4T switch state")]
    InvalidControlWord(String),

    #[error("expected {expected} unit states, got {got}")]
    StateCountMismatch { expected: usize, got: usize },

    #[error("the through-surface sum cancels completely, path loss is infinite")]
    InfinitePathLoss,

    #[error("exhaustive search over 2^{bits} configurations exceeds the 2^{limit} limit")]
    SearchSpaceTooLarge { bits: usize, limit: usize },

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

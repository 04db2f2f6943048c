use thiserror::Error;

/// Errors raised by the library. Each variant maps onto a machine-readable
/// category so the CLI can report it without string matching.
#[derive(Debug, Error)]
pub enum HuboError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("variable index {index} out of range for {n_vars} variables")]
    VarOutOfRange { index: usize, n_vars: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("stage '{stage}' violated the pipeline contract: {message}")]
    ContractViolation { stage: String, message: String },

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HuboError {
    /// Short stable category label (used for CLI exit reporting).
    pub fn category(&self) -> &'static str {
        match self {
            HuboError::Dimension(_) => "dimension",
            HuboError::InvalidTerm(_) => "invalid-term",
            HuboError::VarOutOfRange { .. } => "out-of-range",
            HuboError::Config(_) => "config",
            HuboError::Parse { .. } => "parse",
            HuboError::ContractViolation { .. } => "contract",
            HuboError::TooLarge(_) => "too-large",
            HuboError::Invalid(_) => "invalid",
            HuboError::Io { .. } => "io",
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        HuboError::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HuboError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HuboError>;

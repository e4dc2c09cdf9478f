use std::path::PathBuf;

use serde::Serialize;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario or run configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (wrong phase, malformed action, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A closed-form quantity is undefined for the supplied parameters.
    #[error("undefined: {0}")]
    Undefined(String),

    /// Exhaustive enumeration would exceed the configured profile cap.
    #[error("enumeration of {profiles} profiles exceeds cap {cap}")]
    EnumerationCap { profiles: u128, cap: u64 },

    /// Input data (curves, traces) is inconsistent with what the operation expects.
    #[error("data error: {0}")]
    Data(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Undefined(_) => "undefined",
            Error::EnumerationCap { .. } => "enumeration_cap",
            Error::Data(_) => "data",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
        }
    }
}

/// JSON body emitted on stdout/stderr when the CLI exits with a failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
}

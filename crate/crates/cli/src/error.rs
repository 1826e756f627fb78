use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Core(#[from] causalwalk_core::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable kebab-case error class for the one-line error report.
    pub fn code(&self) -> &'static str {
        use causalwalk_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::EmptyDataset => "empty-dataset",
                E::TooManyEvidence { .. } => "too-many-evidence",
                E::Grammar(_) => "grammar",
                E::NonFiniteLoss { .. } => "non-finite-loss",
                E::InsufficientClass { .. } => "insufficient-class",
                E::Config(_) => "config",
                _ => "internal",
            },
        }
    }

    /// `error[<code>]: <message>` with any line breaks flattened.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.code(), msg)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

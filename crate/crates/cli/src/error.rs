use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid input: {0}")]
    Input(lebesgue_circle::Error),
    #[error("file declares branch point {declared} but its first branch ends at {actual}")]
    BranchPointMismatch { declared: f64, actual: f64 },
    #[error(transparent)]
    Core(#[from] lebesgue_circle::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for anything wrong with the input, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(lebesgue_circle::Error::NotInSpace { .. }) => 2,
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

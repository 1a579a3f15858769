use std::path::{Path, PathBuf};

use stochastic_hawkes::HawkesError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: `{key}` {problem}")]
    Config { key: String, problem: String },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Model(#[from] HawkesError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn config(key: impl Into<String>, problem: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            problem: problem.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration, 4 for a non-finite posterior, 3 for everything
    /// else the data or the model rejected.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(HawkesError::NonFinitePosterior { .. }) => 4,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! Experiment harness for the tomography simulator: configuration, the
//! three built-in studies (standard-vs-fuzzy comparison, dimension/noise
//! sweep, qudit dephasing), and result persistence.

pub mod config;
pub mod emit;
pub mod experiments;

use std::path::PathBuf;

/// Harness failures, grouped by how the CLI reports them: config errors
/// exit 1, numerical failures exit 2, I/O failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Numeric(_) => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

impl From<qst_core::Error> for HarnessError {
    fn from(err: qst_core::Error) -> Self {
        HarnessError::Numeric(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

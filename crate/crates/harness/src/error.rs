//! Harness-level errors, partitioned by how the process should exit:
//! configuration mistakes (2), numeric failures (3), and I/O problems (4).

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        HarnessError::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numeric(_) => 3,
            HarnessError::Io { .. } => 4,
        }
    }
}

impl From<htb_core::Error> for HarnessError {
    fn from(e: htb_core::Error) -> Self {
        match e {
            // Domain violations surface when user-supplied parameters reach
            // the library, so they are configuration mistakes from the
            // harness's point of view.
            htb_core::Error::Domain(msg) => HarnessError::Config(msg),
            htb_core::Error::Numeric(msg) => HarnessError::Numeric(msg),
        }
    }
}

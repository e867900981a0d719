use thiserror::Error;

/// Harness failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed or semantically invalid configuration.
    #[error("config error: {0}")]
    Config(String),
    /// A placement or problem that cannot satisfy its constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Infeasible(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<ma_core::Error> for HarnessError {
    fn from(e: ma_core::Error) -> Self {
        match e {
            ma_core::Error::Infeasible(m) => HarnessError::Infeasible(m),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

use thiserror::Error;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }

    pub fn from_core(e: pcl_core::Error) -> Self {
        match e {
            pcl_core::Error::Divergence { .. } | pcl_core::Error::NotConverged { .. } => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

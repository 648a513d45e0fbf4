use nls_lab::LabError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Lab(#[from] LabError),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// A property the run was asked to verify did not hold. Outputs are still written.
    #[error("check failed: {0}")]
    Assertion(String),
}

impl From<nls_core::Error> for CliError {
    fn from(e: nls_core::Error) -> Self {
        CliError::Lab(e.into())
    }
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit status: 1 validation, 2 numerical abort, 3 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(e) if e.is_numerical_abort() => 2,
            CliError::Assertion(_) => 3,
            _ => 1,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Internal(_) | CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<bandit_lan::Error> for CliError {
    fn from(e: bandit_lan::Error) -> Self {
        match e {
            bandit_lan::Error::Config(_)
            | bandit_lan::Error::Dimension { .. }
            | bandit_lan::Error::UniqueOptimalArmViolation(..) => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numeric(#[from] cdforge::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numeric(e) if e.is_config() => 2,
            HarnessError::Numeric(_) => 3,
            HarnessError::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

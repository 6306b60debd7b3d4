use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Failure(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] invgamma::Error),
    #[error("numerical error in {context}: {source}")]
    At {
        context: String,
        source: invgamma::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

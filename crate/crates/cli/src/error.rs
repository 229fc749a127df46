use thiserror::Error;

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or model parameters. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input data. Exit code 3.
    #[error("{0}")]
    Data(String),
    /// A fit, sampler or integral failed numerically. Exit code 4.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<toroskew::Error> for CliError {
    fn from(e: toroskew::Error) -> Self {
        use toroskew::Error as E;
        match e {
            E::Domain(_) | E::UnsupportedDimension(_) | E::UnsupportedFamily(_) => CliError::Usage(e.to_string()),
            E::DimensionMismatch { .. } | E::EmptyInput => CliError::Data(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

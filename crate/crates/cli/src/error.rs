use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config file or names. Exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The engine refused a computation (guard violation, non-stochastic
    /// kernel, ...). Exit status 1.
    #[error(transparent)]
    Engine(#[from] histories_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Engine(_) | Self::Output(_) => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

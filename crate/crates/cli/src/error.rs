use std::path::PathBuf;

use formation_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("trace format error: {0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 0 ok, 1 I/O, 2 config or trace format, 3 infeasible formation,
    /// 4 no spanning tree, 5 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Format(_) => 2,
            Self::Io { .. } => 1,
            Self::Core(e) => match e {
                CoreError::InvalidInput(_) | CoreError::InvalidDigraph(_) => 2,
                CoreError::Format(_) | CoreError::Csv(_) => 2,
                CoreError::Infeasible { .. } => 3,
                CoreError::NoSpanningTree { .. } => 4,
                CoreError::NotPositiveDefinite(..)
                | CoreError::InvalidLambda2(_)
                | CoreError::NotHurwitz { .. }
                | CoreError::NonFiniteState { .. }
                | CoreError::NoConvergence(_) => 5,
                CoreError::Io(_) => 1,
            },
        }
    }

    /// Short machine-readable class name printed alongside the message.
    pub fn class(&self) -> &'static str {
        match self {
            Self::Config(_) => "ConfigError",
            Self::Format(_) => "FormatError",
            Self::Io { .. } => "IoError",
            Self::Core(e) => match e {
                CoreError::InvalidInput(_) | CoreError::InvalidDigraph(_) => "ConfigError",
                CoreError::Format(_) | CoreError::Csv(_) => "FormatError",
                CoreError::Infeasible { .. } => "Infeasible",
                CoreError::NoSpanningTree { .. } => "NoSpanningTree",
                CoreError::NotPositiveDefinite(..) => "NotPositiveDefinite",
                CoreError::InvalidLambda2(_) => "InvalidLambda2",
                CoreError::NotHurwitz { .. } => "NotHurwitz",
                CoreError::NonFiniteState { .. } => "NonFiniteState",
                CoreError::NoConvergence(_) => "NoConvergence",
                CoreError::Io(_) => "IoError",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("corrupt description: {0}")]
    CorruptDescription(String),

    /// The back-projection system has no solution in front of the camera.
    #[error("back-projection has no solution for pixel ({row}, {col}) at depth {depth}")]
    NoSolution { row: f64, col: f64, depth: f64 },

    #[error("point ({x}, {y}, {d}) projects behind the camera")]
    BehindCamera { x: f64, y: f64, d: f64 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification shared by the CLI exit codes and the C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidConfig,
    Io,
    Numerical,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::InvalidConfiguration(_) => ErrorKind::InvalidConfig,
            Error::Io { .. } | Error::Format { .. } => ErrorKind::Io,
            Error::InvalidInput(_)
            | Error::CorruptDescription(_)
            | Error::NoSolution { .. }
            | Error::BehindCamera { .. }
            | Error::InvalidScene(_) => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
        }
    }

    /// Process exit status: 2 invalid config, 3 IO failure, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::InvalidConfig => 2,
            ErrorKind::Io => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

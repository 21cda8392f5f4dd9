use std::path::PathBuf;

/// Errors raised by the library. Variants are grouped by the stage that
/// produced them so front ends can map them onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum DecError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("degenerate simplex: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("boundary condition error: {0}")]
    Boundary(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("communication error: {0}")]
    Comm(String),
}

impl DecError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DecError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        DecError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = DecError> = std::result::Result<T, E>;

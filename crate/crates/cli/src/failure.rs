use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use dec_core::DecError;

/// Error categories reported through the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 2).
    Config(String),
    /// Unreadable or invalid mesh (exit 3).
    Mesh(String),
    /// Solver breakdown or non-convergence (exit 4).
    Solver(String),
    /// Output could not be written (exit 1).
    Output(String),
}

impl Failure {
    pub fn output(path: &Path, e: impl fmt::Display) -> Self {
        Failure::Output(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Output(_) => 1,
            Failure::Config(_) => 2,
            Failure::Mesh(_) => 3,
            Failure::Solver(_) => 4,
        })
    }

    fn category(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Mesh(_) => "mesh",
            Failure::Solver(_) => "solver",
            Failure::Output(_) => "output",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Failure::Config(m) | Failure::Mesh(m) | Failure::Solver(m) | Failure::Output(m) => m,
        };
        write!(f, "{} error: {msg}", self.category())
    }
}

impl From<DecError> for Failure {
    fn from(e: DecError) -> Self {
        let msg = e.to_string();
        match e {
            DecError::Io { .. } | DecError::Parse { .. } | DecError::Mesh(_) | DecError::Degenerate(_) => {
                Failure::Mesh(msg)
            }
            DecError::InvalidArgument(_) | DecError::Boundary(_) => Failure::Config(msg),
            DecError::Solver(_) | DecError::Comm(_) => Failure::Solver(msg),
        }
    }
}

/// Maps errors from writers, whose I/O failures concern outputs rather
/// than the mesh.
pub fn writing(e: DecError) -> Failure {
    match e {
        DecError::Io { .. } => Failure::Output(e.to_string()),
        other => other.into(),
    }
}

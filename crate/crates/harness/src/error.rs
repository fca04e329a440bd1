use std::io;
use std::path::Path;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Config(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        RunError::Runtime(format!("{}: {err}", path.display()))
    }
}

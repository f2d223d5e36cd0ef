use std::path::PathBuf;

/// Everything that ends a run with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] filtra_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}\n{context}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
        context: String,
    },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

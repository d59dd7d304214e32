use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] flowcast::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error("{} already exists; pass --force to overwrite", .0.display())]
    Exists(PathBuf),
    #[error("{}: {source}", path.display())]
    Sidecar {
        path: PathBuf,
        source: serde_json::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use flowcast::Error as E;
        match self {
            CliError::Core(E::Config(_) | E::Spec(_)) => EXIT_CONFIG,
            CliError::Core(E::Data(_) | E::Ingest { .. } | E::CorruptFile(_) | E::Contract(_)) => {
                EXIT_DATA
            }
            CliError::Core(E::Io(_)) | CliError::File { .. } | CliError::Exists(_) => EXIT_IO,
            CliError::Sidecar { .. } => EXIT_DATA,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

pub fn file_error(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::File { path, source }
}

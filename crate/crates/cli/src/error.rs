use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wipelab_core::Error),
    #[error("{0}")]
    Config(String),
    #[error("run directory {0} already exists; pass --force to overwrite or --resume to continue")]
    RunDirExists(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wipelab_core::Error as E;
        match self {
            CliError::Config(_) | CliError::RunDirExists(_) | CliError::Parse { .. } => EXIT_CONFIG,
            CliError::Core(E::Config(_) | E::Usage(_) | E::Shape { .. } | E::Parse { .. }) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })
    }
}

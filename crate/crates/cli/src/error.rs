use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for a successful command.
pub const EXIT_OK: i32 = 0;
/// Invalid configuration or arguments.
pub const EXIT_CONFIG: i32 = 1;
/// I/O, file-format, numeric or training failure.
pub const EXIT_RUNTIME: i32 = 2;
/// A verification ran to completion but its assertions did not hold.
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum DatasetFileError {
    #[error("not a maskdict dataset file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported dataset schema version {found} (this build reads version {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("dataset file is truncated while reading {0}")]
    Truncated(&'static str),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("dataset header is not valid JSON: {0}")]
    Header(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse {path}: {source}")]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    DatasetFile {
        path: PathBuf,
        #[source]
        source: DatasetFileError,
    },

    #[error(transparent)]
    Core(#[from] maskdict::Error),

    #[error("JSON encoding failed: {0}")]
    Encode(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use maskdict::Error as E;
        match self {
            CliError::Config(_) | CliError::ConfigParse { .. } => EXIT_CONFIG,
            CliError::Core(
                E::InvalidConfig(_)
                | E::InvalidModel(_)
                | E::InsufficientHoldout { .. }
                | E::MissingGroundTruth
                | E::BudgetExceeded { .. },
            ) => EXIT_CONFIG,
            CliError::VerificationFailed(_) => EXIT_VERIFY_FAILED,
            _ => EXIT_RUNTIME,
        }
    }
}

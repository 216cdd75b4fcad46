use std::io;
use std::path::PathBuf;

use aoi_harq::Error as CoreError;

/// Failure of one CLI invocation. [`CliError::exit_code`] maps it onto the
/// documented process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Config(String),

    #[error("non-finite result: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 validation, 3 numeric, 4 runaway cycle, 5 width cap, 1 anything
    /// else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::NoConvergence { .. }) | CliError::Numeric(_) => 3,
            CliError::Core(CoreError::RunawayCycle { .. }) => 4,
            CliError::Core(CoreError::WidthExceeded { .. }) => 5,
            CliError::Core(_) | CliError::Config(_) | CliError::Json { .. } => 2,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

/// Rejects NaN and infinities before they reach an output file.
pub(crate) fn finite(label: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Numeric(format!("{label} = {x}")))
    }
}

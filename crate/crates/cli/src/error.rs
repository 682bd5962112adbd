use std::path::PathBuf;

use pleiolv_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) | CliError::Parse { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
            CliError::Replicate { source, .. } => source.exit_code(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match root(&e) {
            CoreError::Validation(_)
            | CoreError::AllMissingSeries { .. }
            | CoreError::IndicatorAbsent(_)
            | CoreError::NameMismatch(_)
            | CoreError::DimensionMismatch(_) => CliError::Validation(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn root(e: &CoreError) -> &CoreError {
    match e {
        CoreError::AtIteration { source, .. } | CoreError::AtGridPoint { source, .. } => root(source),
        other => other,
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

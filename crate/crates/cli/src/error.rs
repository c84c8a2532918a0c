use std::fmt;

use serde::Serialize;
use serde_json::json;
use wavequant::data::DataError;
use wavequant::model::ModelError;
use wavequant::training::TrainError;
use wavequant::wavebook::WavebookError;

/// Failure class, mapped one-to-one onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ErrorKind, error: impl Into<anyhow::Error>) -> Self {
        CliError { kind, error: error.into() }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError { kind: ErrorKind::Config, error: anyhow::anyhow!("{msg}") }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError { kind: ErrorKind::Data, error: anyhow::anyhow!("{msg}") }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError { kind: self.kind, error: self.error.context(msg) }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let causes: Vec<String> = self.error.chain().skip(1).map(|c| c.to_string()).collect();
        json!({
            "error": {
                "kind": self.kind,
                "exit_code": self.exit_code(),
                "message": self.error.to_string(),
                "causes": causes,
            }
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::new(ErrorKind::Data, e)
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let kind = match &e {
            TrainError::NonFinite { .. } => ErrorKind::Numeric,
            TrainError::EmptySplit(_) | TrainError::EmptyDomain(_) | TrainError::EmptyMask => {
                ErrorKind::Data
            }
            _ => ErrorKind::Config,
        };
        CliError::new(kind, e)
    }
}

/// Errors while reading a checkpoint or wavebook file count as input-data
/// errors; anything else in the model is a configuration problem.
impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let kind = match &e {
            ModelError::Io(_) | ModelError::Format { .. } | ModelError::Version { .. } => {
                ErrorKind::Data
            }
            _ => ErrorKind::Config,
        };
        CliError::new(kind, e)
    }
}

impl From<WavebookError> for CliError {
    fn from(e: WavebookError) -> Self {
        let kind = match &e {
            WavebookError::Io(_) | WavebookError::Format { .. } | WavebookError::Version { .. } => {
                ErrorKind::Data
            }
            _ => ErrorKind::Config,
        };
        CliError::new(kind, e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

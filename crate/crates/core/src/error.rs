use thiserror::Error;

use crate::svm::SvmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty network: at least one UE must be dropped")]
    EmptyNetwork,
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("CQI {0} is outside 1..=15")]
    CqiOutOfRange(i64),
    #[error("empty report stream")]
    EmptyReports,
    #[error("baseline rule needs at least one SNR report")]
    EmptySnrList,
    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("cannot compare runs from scenario {baseline} and scenario {dynamic}")]
    ScenarioMismatch { baseline: String, dynamic: String },
    #[error("malformed comp trace at row {row}: {reason}")]
    MalformedTrace { row: usize, reason: String },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

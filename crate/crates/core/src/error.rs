use thiserror::Error;

use crate::model::ScenarioKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "scenario mismatch: process `{process}` acts on {expected} states, got a {found} state"
    )]
    ScenarioMismatch {
        process: String,
        expected: ScenarioKind,
        found: ScenarioKind,
    },

    #[error("not decidable for `{process}`: {reason}")]
    NotDecidable { process: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("draw source exhausted after {consumed} draws")]
    DrawsExhausted { consumed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn not_decidable(process: &str, reason: impl Into<String>) -> Self {
        Error::NotDecidable {
            process: process.to_owned(),
            reason: reason.into(),
        }
    }
}

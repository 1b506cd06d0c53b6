//! Session service: runs scenario sessions, suspends them on operator
//! questions and resumes them on answers; HTTP API, headless runs and model
//! files for the command line.

pub mod csvio;
mod headless;
pub mod http;
pub mod models;
mod service;
mod session;

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::inference::AnswerKind;
use crate::prediction::PredictionError;
use crate::scenarios::{FieldError, ScenarioError};

pub use headless::{parse_answers, run_headless, HeadlessOptions, HeadlessOutcome, RunStatus};
pub use service::{PackageInfo, Service, TableInfo, TableKind};
pub use session::{AnswerRecord, Clock, FixedClock, JournalEntry, Session, SessionState, SessionView, SystemClock};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("unknown package {0:?}")]
    UnknownPackage(String),
    #[error("no session {0:?}")]
    NotFound(String),
    #[error("invalid event: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Schema(Vec<FieldError>),
    #[error("session is not awaiting an answer (state {0})")]
    NotAwaiting(SessionState),
    #[error("stale question id {got}; the pending question is {expected}")]
    StaleQuestion { expected: u64, got: u64 },
    #[error("answer {answer:?} does not fit a {expected:?} question")]
    AnswerType { expected: AnswerKind, answer: String },
    #[error("session has no report (state {0})")]
    NotDone(SessionState),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error("journal: {0}")]
    Journal(String),
    #[error("{0}")]
    Io(String),
}

impl From<ScenarioError> for GatewayError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Schema(f) => GatewayError::Schema(f),
            ScenarioError::UnknownPackage(p) => GatewayError::UnknownPackage(p),
            e => GatewayError::Scenario(e),
        }
    }
}

impl GatewayError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::UnknownPackage(_) => "unknown_package",
            GatewayError::NotFound(_) => "not_found",
            GatewayError::Schema(_) => "schema",
            GatewayError::NotAwaiting(_) => "not_awaiting",
            GatewayError::StaleQuestion { .. } => "stale_question",
            GatewayError::AnswerType { .. } => "answer_type",
            GatewayError::NotDone(_) => "not_done",
            GatewayError::Csv(_) => "csv",
            GatewayError::BadRequest(_) => "bad_request",
            GatewayError::Scenario(_) => "scenario",
            GatewayError::Diagnostics(_) => "diagnostics",
            GatewayError::Prediction(_) => "prediction",
            GatewayError::Journal(_) => "journal",
            GatewayError::Io(_) => "io",
        }
    }
}

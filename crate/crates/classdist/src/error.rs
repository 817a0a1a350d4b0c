use std::fmt;

use crate::store::StoreError;

/// A rejected field of a request or configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn join(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("session `{0}` not found")]
    SessionNotFound(String),
    #[error("student `{0}` is not on the session roster")]
    NotOnRoster(String),
    #[error("sample size {0} is not configured for this session")]
    SizeNotConfigured(usize),
    #[error("no accepted submissions at n={0}")]
    NoSubmissions(usize),
    #[error("need at least {needed} accepted submissions at n={n}, have {have}")]
    TooFewSubmissions { n: usize, needed: usize, have: usize },
    #[error("{}", join(.0))]
    Validation(Vec<FieldIssue>),
    #[error("missing or invalid instructor token")]
    Unauthorized,
    #[error("{0}")]
    Conflict(String),
    /// Persistence failed; the operation may succeed if retried.
    #[error("storage failure: {0}")]
    Storage(#[source] StoreError),
    #[error(transparent)]
    Kernel(#[from] classdist_core::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation(vec![FieldIssue::new(field, reason)])
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Storage(e) if e.is_retryable())
    }
}

impl From<StoreError> for Error {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownSession(id) => Error::SessionNotFound(id),
            StoreError::DuplicateSession(id) => Error::Conflict(format!("session `{id}` already exists")),
            other => Error::Storage(other),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! HTTP/JSON surface over the session and aggregation operations.
//!
//! | method | path | auth |
//! |---|---|---|
//! | POST | `/api/sessions` | none |
//! | GET | `/api/sessions/{id}` | none |
//! | GET | `/api/sessions/{id}/dataset?student=&n=` | none |
//! | POST | `/api/sessions/{id}/submissions` | none |
//! | GET | `/api/sessions/{id}/summary?estimator=&n=[&bins=]` | instructor |
//! | GET | `/api/sessions/{id}/comparison?n=` | instructor |
//! | GET | `/api/sessions/{id}/export.csv` | instructor |
//!
//! Instructor endpoints take `Authorization: Bearer <token>`. Failed answer
//! checks are ordinary 200 responses with `accepted: false`.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::header::{self, HeaderMap, HeaderValue};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use classdist_core::{EstimateReport, Statistic};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::aggregate;
use crate::config::{ServerConfig, SessionDraft};
use crate::error::Error;
use crate::session::Classroom;
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    Validation,
    Unauthorized,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ApiError {
    fn new(code: ErrorCode, message: impl Into<String>, field: Option<&str>) -> Self {
        Self {
            code,
            message: message.into(),
            field: field.map(str::to_owned),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Validation, message, None)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match &e {
            Error::SessionNotFound(_) => Self::new(ErrorCode::NotFound, message, None),
            Error::NotOnRoster(_) => Self::new(ErrorCode::NotFound, message, Some("student")),
            Error::SizeNotConfigured(_) => Self::new(ErrorCode::Validation, message, Some("n")),
            Error::NoSubmissions(_) | Error::TooFewSubmissions { .. } => {
                Self::new(ErrorCode::Conflict, message, Some("n"))
            }
            Error::Validation(issues) => Self::new(
                ErrorCode::Validation,
                message,
                issues.first().map(|i| i.field.as_str()),
            ),
            Error::Unauthorized => Self::new(ErrorCode::Unauthorized, message, None),
            Error::Conflict(_) => Self::new(ErrorCode::Conflict, message, None),
            Error::Kernel(_) => Self::new(ErrorCode::Validation, message, None),
            Error::Storage(_) => {
                tracing::error!(error = %e, "storage failure");
                Self::new(ErrorCode::Internal, format!("{message}; retry later"), None)
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::validation(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::validation(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    classroom: Arc<Classroom>,
    changes: watch::Sender<u64>,
    long_poll: Duration,
}

impl AppState {
    pub fn new(classroom: Arc<Classroom>, long_poll: Duration) -> Arc<Self> {
        Arc::new(Self {
            classroom,
            changes: watch::Sender::new(0),
            long_poll,
        })
    }

    pub fn classroom(&self) -> &Arc<Classroom> {
        &self.classroom
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_info))
        .route("/api/sessions/{id}/dataset", get(dataset))
        .route("/api/sessions/{id}/submissions", post(submit))
        .route("/api/sessions/{id}/summary", get(summary))
        .route("/api/sessions/{id}/comparison", get(comparison))
        .route("/api/sessions/{id}/export.csv", get(export))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, Error> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string(), None))?
        .map_err(ApiError::from)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn authorize(state: &AppState, id: &str, headers: &HeaderMap) -> ApiResult<()> {
    // Unknown sessions are reported before missing tokens.
    state.classroom.session(id)?;
    let token = bearer(headers).ok_or_else(|| ApiError::from(Error::Unauthorized))?;
    state.classroom.authorize(id, token)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub instructor_token: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: axum::body::Bytes,
) -> ApiResult<(StatusCode, Json<CreatedSession>)> {
    let draft: SessionDraft = if body.iter().all(u8::is_ascii_whitespace) {
        SessionDraft::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::validation(e.to_string()))?
    };
    let classroom = state.classroom.clone();
    let (session_id, instructor_token) = blocking(move || classroom.open_session(draft)).await?;
    Ok((
        StatusCode::CREATED,
        Json(CreatedSession {
            session_id,
            instructor_token,
        }),
    ))
}

/// Public description of a session; never includes the key, law or token.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub sample_sizes: Vec<usize>,
    pub units: String,
    pub roster_required: bool,
}

async fn session_info(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionInfo>> {
    let config = state.classroom.config(&id)?;
    Ok(Json(SessionInfo {
        session_id: id,
        sample_sizes: config.sample_sizes,
        units: config.units,
        roster_required: config.roster.is_some(),
    }))
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    student: String,
    n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetBody {
    pub values: Vec<f64>,
    pub n: usize,
    pub units: String,
}

async fn dataset(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<DatasetQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let config = state.classroom.config(&id)?;
    let ds = state.classroom.assign_dataset(&id, &q.student, q.n)?;
    let body = DatasetBody {
        n: ds.n(),
        values: ds.values,
        units: config.units,
    };
    Ok((
        [(header::CACHE_CONTROL, HeaderValue::from_static("private, max-age=86400"))],
        Json(body),
    )
        .into_response())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionBody {
    pub student: String,
    pub n: usize,
    pub mean: f64,
    pub mean_error: f64,
    pub median: f64,
}

async fn submit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SubmissionBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(b) = body?;
    if b.student.is_empty() {
        return Err(Error::invalid("student", "must not be empty").into());
    }
    let report = EstimateReport {
        n: b.n,
        mean: b.mean,
        mean_error: b.mean_error,
        median: b.median,
    };
    let classroom = state.classroom.clone();
    let outcome = blocking(move || classroom.submit(&id, &b.student, report)).await?;
    if outcome.accepted {
        state.changes.send_modify(|v| *v += 1);
    }
    Ok(Json(outcome).into_response())
}

#[derive(Debug, Deserialize)]
struct SummaryQuery {
    estimator: Statistic,
    n: usize,
    #[serde(default)]
    bins: Option<usize>,
}

fn etag(revision: u64) -> String {
    format!("\"{revision}\"")
}

/// With `If-None-Match` equal to the current tag, waits up to the long-poll
/// interval for a new submission before answering 304.
async fn summary(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    query: Result<Query<SummaryQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query?;
    authorize(&state, &id, &headers)?;
    let known = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .map(str::to_owned);
    let deadline = tokio::time::Instant::now() + state.long_poll;
    let mut changes = state.changes.subscribe();
    loop {
        let tag = etag(state.classroom.revision(&id)?);
        if known.as_deref() != Some(tag.as_str()) {
            let s = aggregate::class_summary(&state.classroom, &id, q.estimator, q.n, q.bins)?;
            return Ok(([(header::ETAG, tag)], Json(s)).into_response());
        }
        match tokio::time::timeout_at(deadline, changes.changed()).await {
            Ok(Ok(())) => continue,
            _ => return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, tag)]).into_response()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ComparisonQuery {
    n: usize,
}

async fn comparison(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    query: Result<Query<ComparisonQuery>, QueryRejection>,
) -> ApiResult<Json<aggregate::ErrorComparison>> {
    let Query(q) = query?;
    authorize(&state, &id, &headers)?;
    Ok(Json(aggregate::error_comparison(&state.classroom, &id, q.n)?))
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    authorize(&state, &id, &headers)?;
    let csv = aggregate::export_csv(&state.classroom, &id)?;
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8"))],
        csv,
    )
        .into_response())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens the store, binds, and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    let store = Store::open(&config.store_path)?;
    let classroom = Arc::new(Classroom::new(store));
    let state = AppState::new(classroom, Duration::from_secs(config.long_poll_secs));
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.bind,
            source,
        })?;
    tracing::info!(addr = %listener.local_addr()?, store = %config.store_path.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

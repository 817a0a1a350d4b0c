//! Session lifecycle: creation, dataset assignment, answer checking and
//! recording of accepted submissions.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use classdist_core::{derive_seed, sample_prefix, Dataset, EstimateReport};
use serde::{Deserialize, Serialize};

use crate::config::{SessionConfig, SessionDraft};
use crate::error::{Error, Result};
use crate::store::{Store, StoredSession};

/// One student's accepted estimates at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSubmission {
    pub student_id: String,
    pub n: usize,
    pub report: EstimateReport,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Wrong,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        self == Verdict::Ok
    }
}

/// Per-field outcome of checking a report. Never carries the true values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub mean: Verdict,
    pub mean_error: Verdict,
    pub median: Verdict,
    pub overall: bool,
}

impl VerificationResult {
    fn from_verdicts(mean: Verdict, mean_error: Verdict, median: Verdict) -> Self {
        Self {
            mean,
            mean_error,
            median,
            overall: mean.is_ok() && mean_error.is_ok() && median.is_ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionOutcome {
    #[serde(flatten)]
    pub verification: VerificationResult,
    pub accepted: bool,
}

/// `|submitted - truth| <= tolerance * max(1, |truth|)`.
pub fn within_tolerance(submitted: f64, truth: f64, tolerance: f64) -> Verdict {
    if (submitted - truth).abs() <= tolerance * truth.abs().max(1.0) {
        Verdict::Ok
    } else {
        Verdict::Wrong
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that always reads the same instant.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// Source of session ids, session keys and instructor tokens.
pub trait IdSource: Send + Sync {
    fn session_id(&self) -> String;
    fn secret(&self) -> String;
}

/// Random v4 UUIDs from the operating system's generator.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomIds;

impl IdSource for RandomIds {
    fn session_id(&self) -> String {
        uuid::Uuid::new_v4().simple().to_string()
    }

    fn secret(&self) -> String {
        uuid::Uuid::new_v4().simple().to_string()
    }
}

/// Predictable ids for tests and recorded transcripts.
#[derive(Debug, Default)]
pub struct SequentialIds(AtomicU64);

impl IdSource for SequentialIds {
    fn session_id(&self) -> String {
        format!("session-{:04}", self.0.fetch_add(1, Ordering::Relaxed) + 1)
    }

    fn secret(&self) -> String {
        format!("secret-{:04}", self.0.fetch_add(1, Ordering::Relaxed) + 1)
    }
}

/// The session service over a [`Store`].
pub struct Classroom {
    store: Store,
    clock: Arc<dyn Clock>,
    ids: Arc<dyn IdSource>,
}

impl std::fmt::Debug for Classroom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Classroom").field("store", &self.store).finish_non_exhaustive()
    }
}

impl Classroom {
    pub fn new(store: Store) -> Self {
        Self::with_sources(store, Arc::new(SystemClock), Arc::new(RandomIds))
    }

    pub fn with_sources(store: Store, clock: Arc<dyn Clock>, ids: Arc<dyn IdSource>) -> Self {
        Self { store, clock, ids }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// Validates and persists `config` under a fresh unguessable id.
    pub fn create_session(&self, config: SessionConfig) -> Result<String> {
        config.validate()?;
        let session_id = self.ids.session_id();
        self.store.put_session(StoredSession {
            session_id: session_id.clone(),
            config,
            created_at: self.clock.now(),
        })?;
        Ok(session_id)
    }

    /// Fills a draft with a generated key (when absent) and instructor token,
    /// then creates the session. Returns `(session_id, instructor_token)`.
    pub fn open_session(&self, draft: SessionDraft) -> Result<(String, String)> {
        let key = draft
            .session_key
            .clone()
            .unwrap_or_else(|| self.ids.secret());
        let config = draft.into_config(key, self.ids.secret());
        let token = config.instructor_token.clone();
        Ok((self.create_session(config)?, token))
    }

    pub fn session(&self, session_id: &str) -> Result<StoredSession> {
        Ok(self.store.get_session(session_id)?)
    }

    pub fn config(&self, session_id: &str) -> Result<SessionConfig> {
        Ok(self.session(session_id)?.config)
    }

    /// Succeeds only when `token` is the session's instructor token.
    pub fn authorize(&self, session_id: &str, token: &str) -> Result<SessionConfig> {
        let config = self.config(session_id)?;
        let expected = config.instructor_token.as_bytes();
        let given = token.as_bytes();
        let same = expected.len() == given.len()
            && expected.iter().zip(given).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0;
        if same {
            Ok(config)
        } else {
            Err(Error::Unauthorized)
        }
    }

    fn dataset_for(config: &SessionConfig, student_id: &str, n: usize) -> Result<Dataset> {
        if !config.has_size(n) {
            return Err(Error::SizeNotConfigured(n));
        }
        if !config.admits(student_id) {
            return Err(Error::NotOnRoster(student_id.to_owned()));
        }
        let seed = derive_seed(&config.session_key, student_id);
        Ok(sample_prefix(&config.spec, seed, n)?)
    }

    /// The student's observations at size `n`; the first `n` of their stream.
    pub fn assign_dataset(&self, session_id: &str, student_id: &str, n: usize) -> Result<Dataset> {
        Self::dataset_for(&self.config(session_id)?, student_id, n)
    }

    /// Checks each field of `report` against the recomputed estimates.
    pub fn verify(
        &self,
        session_id: &str,
        student_id: &str,
        n: usize,
        report: &EstimateReport,
    ) -> Result<VerificationResult> {
        let config = self.config(session_id)?;
        Self::check(&config, student_id, n, report)
    }

    fn check(
        config: &SessionConfig,
        student_id: &str,
        n: usize,
        report: &EstimateReport,
    ) -> Result<VerificationResult> {
        let data = Self::dataset_for(config, student_id, n)?;
        if report.n != n {
            return Err(Error::invalid("n", format!("report is for n={}, not n={n}", report.n)));
        }
        report
            .validate()
            .map_err(|e| Error::invalid("report", e.to_string()))?;
        let truth = EstimateReport::from_data(&data.values)?;
        let tol = config.tolerance;
        Ok(VerificationResult::from_verdicts(
            within_tolerance(report.mean, truth.mean, tol),
            within_tolerance(report.mean_error, truth.mean_error, tol),
            within_tolerance(report.median, truth.median, tol),
        ))
    }

    /// Stores `submission` if it verifies, replacing any earlier row for the
    /// same student and size. Returns whether it was accepted.
    pub fn record_submission(&self, session_id: &str, submission: EstimateSubmission) -> Result<bool> {
        Ok(self.record(session_id, submission)?.accepted)
    }

    fn record(&self, session_id: &str, submission: EstimateSubmission) -> Result<SubmissionOutcome> {
        let config = self.config(session_id)?;
        let verification = Self::check(&config, &submission.student_id, submission.n, &submission.report)?;
        if verification.overall {
            self.store.upsert_submission(session_id, submission)?;
        }
        Ok(SubmissionOutcome {
            verification,
            accepted: verification.overall,
        })
    }

    /// The student-facing path: stamp, verify, and record when correct.
    pub fn submit(
        &self,
        session_id: &str,
        student_id: &str,
        report: EstimateReport,
    ) -> Result<SubmissionOutcome> {
        let submission = EstimateSubmission {
            student_id: student_id.to_owned(),
            n: report.n,
            report,
            submitted_at: self.clock.now(),
        };
        self.record(session_id, submission)
    }

    pub fn submissions(&self, session_id: &str, n: Option<usize>) -> Result<Vec<EstimateSubmission>> {
        Ok(self.store.submissions_for(session_id, n)?)
    }

    pub fn revision(&self, session_id: &str) -> Result<u64> {
        Ok(self.store.revision(session_id)?)
    }
}

//! Classroom sampling-distribution service.
//!
//! Each student gets a personal dataset derived from the session key and
//! their id, checks their mean, standard error and median against the
//! recomputed values, and submits them once correct. The instructor then
//! looks at the class's estimates per sample size as empirical sampling
//! distributions.

pub mod aggregate;
pub mod api;
pub mod cli;
pub mod config;
pub mod conformance;
pub mod error;
pub mod session;
pub mod simulate;
pub mod store;

pub use aggregate::{class_summary, error_comparison, export_csv, ErrorComparison, SamplingSummary};
pub use config::{ServerConfig, SessionConfig, SessionDraft};
pub use error::{Error, FieldIssue, Result};
pub use session::{Classroom, EstimateSubmission, SubmissionOutcome, Verdict, VerificationResult};
pub use store::{Store, StoreError, StoreOptions};

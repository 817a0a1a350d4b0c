//! Session and server configuration.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use classdist_core::DistributionSpec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldIssue, Result};

pub const DEFAULT_SAMPLE_SIZES: [usize; 3] = [5, 30, 100];
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_UNITS: &str = "days";

pub fn default_spec() -> DistributionSpec {
    DistributionSpec::exponential(50.0).expect("admissible default")
}

/// Everything that governs one classroom run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Secret mixed into every student's seed.
    pub session_key: String,
    pub spec: DistributionSpec,
    pub sample_sizes: Vec<usize>,
    /// Relative tolerance, floored at an absolute band of the same size.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roster: Option<Vec<String>>,
    pub instructor_token: String,
    #[serde(default = "default_units")]
    pub units: String,
}

fn default_units() -> String {
    DEFAULT_UNITS.to_owned()
}

impl SessionConfig {
    /// The exercise defaults: Exponential(mean 50) lifetimes in days, n = 5, 30, 100.
    pub fn new(session_key: impl Into<String>, instructor_token: impl Into<String>) -> Self {
        Self {
            session_key: session_key.into(),
            spec: default_spec(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            tolerance: DEFAULT_TOLERANCE,
            roster: None,
            instructor_token: instructor_token.into(),
            units: default_units(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.session_key.is_empty() {
            issues.push(FieldIssue::new("session_key", "must not be empty"));
        }
        if self.instructor_token.is_empty() {
            issues.push(FieldIssue::new("instructor_token", "must not be empty"));
        }
        if self.sample_sizes.is_empty() {
            issues.push(FieldIssue::new("sample_sizes", "must not be empty"));
        } else if self.sample_sizes[0] < 2 {
            issues.push(FieldIssue::new(
                "sample_sizes",
                "every size must be at least 2 so the standard error is defined",
            ));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            issues.push(FieldIssue::new("sample_sizes", "must be strictly ascending"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            issues.push(FieldIssue::new("tolerance", "must be a positive number"));
        }
        if let Some(roster) = &self.roster {
            let mut seen = HashSet::new();
            if roster.iter().any(String::is_empty) {
                issues.push(FieldIssue::new("roster", "student ids must not be empty"));
            }
            if !roster.iter().all(|id| seen.insert(id)) {
                issues.push(FieldIssue::new("roster", "student ids must be unique"));
            }
        }
        if self.units.is_empty() {
            issues.push(FieldIssue::new("units", "must not be empty"));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    pub fn has_size(&self, n: usize) -> bool {
        self.sample_sizes.binary_search(&n).is_ok()
    }

    pub fn admits(&self, student_id: &str) -> bool {
        self.roster
            .as_ref()
            .is_none_or(|r| r.iter().any(|s| s == student_id))
    }
}

/// A session request where every field may be left to its default.
///
/// A missing `session_key` is replaced by a fresh random key and the
/// instructor token is always generated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDraft {
    #[serde(default)]
    pub session_key: Option<String>,
    #[serde(default)]
    pub spec: Option<DistributionSpec>,
    #[serde(default)]
    pub sample_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub roster: Option<Vec<String>>,
    #[serde(default)]
    pub units: Option<String>,
}

impl SessionDraft {
    pub fn into_config(self, session_key: String, instructor_token: String) -> SessionConfig {
        let base = SessionConfig::new(session_key, instructor_token);
        SessionConfig {
            session_key: self.session_key.unwrap_or(base.session_key),
            spec: self.spec.unwrap_or(base.spec),
            sample_sizes: self.sample_sizes.unwrap_or(base.sample_sizes),
            tolerance: self.tolerance.unwrap_or(base.tolerance),
            roster: self.roster,
            units: self.units.unwrap_or(base.units),
            instructor_token: base.instructor_token,
        }
    }
}

pub const ENV_PORT: &str = "CLASSDIST_PORT";
pub const ENV_STORE: &str = "CLASSDIST_STORE";

/// Server settings read from a JSON file, with environment overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    pub store_path: PathBuf,
    /// Longest time a summary request with `If-None-Match` waits for a change.
    #[serde(default = "default_long_poll")]
    pub long_poll_secs: u64,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_long_poll() -> u64 {
    25
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid {var}: {reason}")]
    Env { var: &'static str, reason: String },
}

impl ServerConfig {
    pub fn new(store_path: impl Into<PathBuf>) -> Self {
        Self {
            bind: default_bind(),
            store_path: store_path.into(),
            long_poll_secs: default_long_poll(),
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Reads `path` and applies the environment overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let cfg = Self::from_json(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        cfg.with_overrides(|k| std::env::var(k).ok())
    }

    pub fn with_overrides(
        mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        if let Some(port) = lookup(ENV_PORT) {
            let port = port.parse::<u16>().map_err(|e| ConfigError::Env {
                var: ENV_PORT,
                reason: e.to_string(),
            })?;
            self.bind.set_port(port);
        }
        if let Some(path) = lookup(ENV_STORE) {
            self.store_path = PathBuf::from(path);
        }
        Ok(self)
    }
}

//! Durable storage of sessions and accepted submissions.
//!
//! The store is one line-delimited JSON file. The first line is a header
//! carrying the format version; every other line is a `session` or a
//! `submission` record. Upserts are appended; a later submission line for the
//! same `(session_id, student_id, n)` supersedes earlier ones. Whenever the
//! file is rewritten (on open after a crash, or on [`Store::compact`]) the new
//! contents are written to a temporary file which is then renamed over the
//! old one.
//!
//! An append interrupted by a crash leaves at most an unterminated last line.
//! Loading discards it, so a row is either fully old or fully new.
//!
//! A writable store holds an exclusive lock on `<path>.lock` for its whole
//! lifetime; read-only handles take no lock.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;
use crate::session::EstimateSubmission;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSession {
    pub session_id: String,
    pub config: SessionConfig,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRow {
    pub session_id: String,
    #[serde(flatten)]
    pub submission: EstimateSubmission,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header { version: u32 },
    Session(StoredSession),
    Submission(SubmissionRow),
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session `{0}` not found")]
    UnknownSession(String),
    #[error("session `{0}` already exists")]
    DuplicateSession(String),
    #[error("store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("store file is corrupt at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("store format version {0} is not supported")]
    UnsupportedVersion(u32),
    #[error("store {0} is locked by another process")]
    Locked(PathBuf),
    #[error("store was opened read-only")]
    ReadOnly,
    #[error("cannot encode record: {0}")]
    Encode(#[from] serde_json::Error),
}

impl StoreError {
    /// Failures that may clear up on retry (I/O trouble, a competing writer).
    pub fn is_retryable(&self) -> bool {
        matches!(self, StoreError::Io(_) | StoreError::Locked(_))
    }
}

type Result<T, E = StoreError> = std::result::Result<T, E>;
type SubmissionKey = (String, usize);

#[derive(Debug, Default)]
struct State {
    order: Vec<String>,
    sessions: HashMap<String, StoredSession>,
    submissions: HashMap<String, BTreeMap<SubmissionKey, EstimateSubmission>>,
    revisions: HashMap<String, u64>,
    /// Submission lines in the file that a later line superseded.
    superseded: usize,
}

impl State {
    fn apply(&mut self, record: Record) -> Result<(), String> {
        match record {
            Record::Header { .. } => Err("unexpected header".into()),
            Record::Session(s) => {
                if self.sessions.contains_key(&s.session_id) {
                    return Err(format!("duplicate session `{}`", s.session_id));
                }
                self.order.push(s.session_id.clone());
                self.submissions.insert(s.session_id.clone(), BTreeMap::new());
                self.revisions.insert(s.session_id.clone(), 0);
                self.sessions.insert(s.session_id.clone(), s);
                Ok(())
            }
            Record::Submission(row) => {
                let rows = self
                    .submissions
                    .get_mut(&row.session_id)
                    .ok_or_else(|| format!("submission for unknown session `{}`", row.session_id))?;
                let key = (row.submission.student_id.clone(), row.submission.n);
                if rows.insert(key, row.submission).is_some() {
                    self.superseded += 1;
                }
                *self.revisions.entry(row.session_id).or_default() += 1;
                Ok(())
            }
        }
    }

    fn row_count(&self) -> usize {
        self.submissions.values().map(BTreeMap::len).sum()
    }

    fn render(&self) -> Result<String> {
        let mut out = String::new();
        push_line(&mut out, &Record::Header {
            version: FORMAT_VERSION,
        })?;
        for id in &self.order {
            push_line(&mut out, &Record::Session(self.sessions[id].clone()))?;
        }
        for id in &self.order {
            for sub in self.submissions[id].values() {
                push_line(
                    &mut out,
                    &Record::Submission(SubmissionRow {
                        session_id: id.clone(),
                        submission: sub.clone(),
                    }),
                )?;
            }
        }
        Ok(out)
    }
}

fn push_line(out: &mut String, record: &Record) -> Result<()> {
    out.push_str(&serde_json::to_string(record)?);
    out.push('\n');
    Ok(())
}

#[derive(Debug)]
struct Writer {
    path: PathBuf,
    file: File,
    len: u64,
    sync: bool,
    _lock: File,
}

impl Writer {
    fn append(&mut self, line: &str) -> Result<()> {
        let result = self.file.write_all(line.as_bytes()).and_then(|()| {
            if self.sync {
                self.file.sync_data()
            } else {
                self.file.flush()
            }
        });
        match result {
            Ok(()) => {
                self.len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                // Drop whatever part of the line made it to disk so the next
                // append starts on a clean line.
                let _ = self.file.set_len(self.len);
                let _ = self.file.seek(SeekFrom::End(0));
                Err(e.into())
            }
        }
    }
}

/// Options for a file-backed store.
#[derive(Debug, Clone, Copy)]
pub struct StoreOptions {
    /// `fsync` after every append. Off only for throwaway simulations.
    pub sync: bool,
    /// Rewrite on open once superseded lines outnumber live rows by this much.
    pub compact_slack: usize,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self {
            sync: true,
            compact_slack: 1024,
        }
    }
}

#[derive(Debug)]
enum Backing {
    Memory,
    ReadOnly,
    File(Mutex<Writer>),
}

/// Sessions and their accepted submissions.
#[derive(Debug)]
pub struct Store {
    state: RwLock<State>,
    backing: Backing,
    write_guard: Mutex<()>,
}

fn lock_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".lock");
    PathBuf::from(p)
}

fn load(path: &Path) -> Result<(State, bool)> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((State::default(), true)),
        Err(e) => return Err(e.into()),
    };
    if text.is_empty() {
        return Ok((State::default(), true));
    }
    let mut state = State::default();
    let mut needs_rewrite = false;
    let mut lines: Vec<&str> = text.split('\n').collect();
    // `split` yields a trailing "" for newline-terminated text; anything
    // else is an append cut short.
    let tail = lines.pop().unwrap_or_default();
    let tail_record = if tail.is_empty() {
        None
    } else {
        needs_rewrite = true;
        serde_json::from_str::<Record>(tail).ok()
    };
    for (i, line) in lines.iter().enumerate() {
        let record: Record = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        if i == 0 {
            match record {
                Record::Header { version } if version == FORMAT_VERSION => continue,
                Record::Header { version } => return Err(StoreError::UnsupportedVersion(version)),
                _ => {
                    return Err(StoreError::Corrupt {
                        line: 1,
                        message: "missing header".into(),
                    })
                }
            }
        }
        state
            .apply(record)
            .map_err(|message| StoreError::Corrupt { line: i + 1, message })?;
    }
    if lines.is_empty() {
        // Only a torn header.
        return Ok((State::default(), true));
    }
    if let Some(record) = tail_record {
        let line = lines.len() + 1;
        state
            .apply(record)
            .map_err(|message| StoreError::Corrupt { line, message })?;
    }
    Ok((state, needs_rewrite))
}

fn rewrite(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        // Not every platform can fsync a directory.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

fn open_append(path: &Path) -> Result<(File, u64)> {
    let file = OpenOptions::new().append(true).open(path)?;
    let len = file.metadata()?.len();
    Ok((file, len))
}

impl Store {
    pub fn in_memory() -> Self {
        Self::with_backing(State::default(), Backing::Memory)
    }

    fn with_backing(state: State, backing: Backing) -> Self {
        Self {
            state: RwLock::new(state),
            backing,
            write_guard: Mutex::new(()),
        }
    }

    /// Opens (creating if needed) a writable store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path, StoreOptions::default())
    }

    pub fn open_with(path: impl AsRef<Path>, options: StoreOptions) -> Result<Self> {
        let path = path.as_ref();
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(lock_path(path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(path.to_owned())),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let (mut state, needs_rewrite) = load(path)?;
        if needs_rewrite || state.superseded > state.row_count() + options.compact_slack {
            rewrite(path, &state.render()?)?;
            state.superseded = 0;
        }
        let (file, len) = open_append(path)?;
        let writer = Writer {
            path: path.to_owned(),
            file,
            len,
            sync: options.sync,
            _lock: lock,
        };
        Ok(Self::with_backing(state, Backing::File(Mutex::new(writer))))
    }

    /// Loads a snapshot of `path` without locking it. Writes fail with
    /// [`StoreError::ReadOnly`].
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{} does not exist", path.display()),
            )
            .into());
        }
        let (state, _) = load(path)?;
        Ok(Self::with_backing(state, Backing::ReadOnly))
    }

    pub fn path(&self) -> Option<PathBuf> {
        match &self.backing {
            Backing::File(w) => Some(w.lock().expect("writer lock").path.clone()),
            _ => None,
        }
    }

    fn persist(&self, record: &Record) -> Result<()> {
        match &self.backing {
            Backing::Memory => Ok(()),
            Backing::ReadOnly => Err(StoreError::ReadOnly),
            Backing::File(w) => {
                let mut line = serde_json::to_string(record)?;
                line.push('\n');
                w.lock().expect("writer lock").append(&line)
            }
        }
    }

    pub fn put_session(&self, session: StoredSession) -> Result<()> {
        let _guard = self.write_guard.lock().expect("write guard");
        if self.state.read().expect("state").sessions.contains_key(&session.session_id) {
            return Err(StoreError::DuplicateSession(session.session_id));
        }
        let record = Record::Session(session);
        self.persist(&record)?;
        self.state
            .write()
            .expect("state")
            .apply(record)
            .expect("checked above");
        Ok(())
    }

    pub fn get_session(&self, session_id: &str) -> Result<StoredSession> {
        self.state
            .read()
            .expect("state")
            .sessions
            .get(session_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(session_id.to_owned()))
    }

    /// Session ids in creation order.
    pub fn list_sessions(&self) -> Vec<String> {
        self.state.read().expect("state").order.clone()
    }

    /// Inserts or replaces the row keyed by `(session_id, student_id, n)`.
    pub fn upsert_submission(&self, session_id: &str, submission: EstimateSubmission) -> Result<()> {
        let _guard = self.write_guard.lock().expect("write guard");
        if !self.state.read().expect("state").sessions.contains_key(session_id) {
            return Err(StoreError::UnknownSession(session_id.to_owned()));
        }
        let record = Record::Submission(SubmissionRow {
            session_id: session_id.to_owned(),
            submission,
        });
        self.persist(&record)?;
        self.state
            .write()
            .expect("state")
            .apply(record)
            .expect("session exists");
        Ok(())
    }

    /// Accepted rows ordered by `(student_id, n)`, optionally only those at `n`.
    pub fn submissions_for(
        &self,
        session_id: &str,
        n: Option<usize>,
    ) -> Result<Vec<EstimateSubmission>> {
        let state = self.state.read().expect("state");
        let rows = state
            .submissions
            .get(session_id)
            .ok_or_else(|| StoreError::UnknownSession(session_id.to_owned()))?;
        Ok(rows
            .values()
            .filter(|s| n.is_none_or(|n| s.n == n))
            .cloned()
            .collect())
    }

    /// Number of accepted upserts applied to a session; changes whenever its
    /// submission set does.
    pub fn revision(&self, session_id: &str) -> Result<u64> {
        self.state
            .read()
            .expect("state")
            .revisions
            .get(session_id)
            .copied()
            .ok_or_else(|| StoreError::UnknownSession(session_id.to_owned()))
    }

    /// Rewrites the backing file without superseded lines.
    pub fn compact(&self) -> Result<()> {
        let _guard = self.write_guard.lock().expect("write guard");
        match &self.backing {
            Backing::Memory => Ok(()),
            Backing::ReadOnly => Err(StoreError::ReadOnly),
            Backing::File(w) => {
                let mut w = w.lock().expect("writer lock");
                let contents = self.state.read().expect("state").render()?;
                rewrite(&w.path, &contents)?;
                let (file, len) = open_append(&w.path)?;
                w.file = file;
                w.len = len;
                self.state.write().expect("state").superseded = 0;
                Ok(())
            }
        }
    }
}

//! Class-level views: sampling-distribution summaries per sample size, the
//! reported-error comparison, and the CSV export.

use chrono::{DateTime, SecondsFormat, Utc};
use classdist_core::{empirical_se, histogram, mean, ProbabilityHistogram, Statistic};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{Classroom, EstimateSubmission};

pub use classdist_core::DEFAULT_BIN_COUNT;

/// Fraction of the pooled span added on each side of the shared axis.
pub const RANGE_PADDING: f64 = 0.05;

/// The class's estimates at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSummary {
    pub n: usize,
    pub estimator: Statistic,
    /// One estimate per student, ordered by student id.
    pub estimates: Vec<f64>,
    /// Built over the range shared by every configured `n`.
    pub histogram: ProbabilityHistogram,
    /// Sample SD of `estimates`; absent with fewer than two submissions.
    pub empirical_se: Option<f64>,
    pub submission_count: usize,
}

/// Average reported standard error against the spread of reported means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorComparison {
    pub n: usize,
    pub mean_of_reported_errors: f64,
    pub sd_of_reported_means: f64,
    /// Absent when the reported means do not vary.
    pub ratio: Option<f64>,
    pub submission_count: usize,
}

fn estimate(sub: &EstimateSubmission, estimator: Statistic) -> f64 {
    match estimator {
        Statistic::Mean => sub.report.mean,
        Statistic::Median => sub.report.median,
    }
}

/// `[min, max]` padded by 5% of the span on each side. A zero span is padded
/// by 5% of `max(|value|, 1)` instead.
pub fn shared_range(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .into_iter()
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })?;
    let span = hi - lo;
    let pad = if span > 0.0 {
        RANGE_PADDING * span
    } else {
        RANGE_PADDING * lo.abs().max(1.0)
    };
    Some((lo - pad, hi + pad))
}

/// Summary of `estimator` at `n` over accepted submissions.
pub fn class_summary(
    classroom: &Classroom,
    session_id: &str,
    estimator: Statistic,
    n: usize,
    bin_count: Option<usize>,
) -> Result<SamplingSummary> {
    let config = classroom.config(session_id)?;
    if !config.has_size(n) {
        return Err(Error::SizeNotConfigured(n));
    }
    let all = classroom.submissions(session_id, None)?;
    let estimates: Vec<f64> = all
        .iter()
        .filter(|s| s.n == n)
        .map(|s| estimate(s, estimator))
        .collect();
    if estimates.is_empty() {
        return Err(Error::NoSubmissions(n));
    }
    let (lo, hi) = shared_range(
        all.iter()
            .filter(|s| config.has_size(s.n))
            .map(|s| estimate(s, estimator)),
    )
    .expect("at least one estimate");
    let histogram = histogram(&estimates, bin_count.unwrap_or(DEFAULT_BIN_COUNT), lo, hi)?;
    let empirical_se = if estimates.len() >= 2 {
        Some(empirical_se(&estimates)?)
    } else {
        None
    };
    Ok(SamplingSummary {
        n,
        estimator,
        submission_count: estimates.len(),
        estimates,
        histogram,
        empirical_se,
    })
}

/// Summaries for every configured sample size that has submissions.
pub fn class_summaries(
    classroom: &Classroom,
    session_id: &str,
    estimator: Statistic,
    bin_count: Option<usize>,
) -> Result<Vec<SamplingSummary>> {
    let config = classroom.config(session_id)?;
    let mut out = Vec::new();
    for &n in &config.sample_sizes {
        match class_summary(classroom, session_id, estimator, n, bin_count) {
            Ok(s) => out.push(s),
            Err(Error::NoSubmissions(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn error_comparison(classroom: &Classroom, session_id: &str, n: usize) -> Result<ErrorComparison> {
    let config = classroom.config(session_id)?;
    if !config.has_size(n) {
        return Err(Error::SizeNotConfigured(n));
    }
    let rows = classroom.submissions(session_id, Some(n))?;
    if rows.len() < 2 {
        return Err(Error::TooFewSubmissions {
            n,
            needed: 2,
            have: rows.len(),
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.report.mean_error).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.report.mean).collect();
    let mean_of_reported_errors = mean(&errors)?;
    let sd_of_reported_means = empirical_se(&means)?;
    let ratio = (sd_of_reported_means > 0.0).then(|| mean_of_reported_errors / sd_of_reported_means);
    Ok(ErrorComparison {
        n,
        mean_of_reported_errors,
        sd_of_reported_means,
        ratio,
        submission_count: rows.len(),
    })
}

pub const CSV_HEADER: [&str; 6] = ["student_id", "n", "mean", "mean_error", "median", "submitted_at"];

/// One line of the export.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub student_id: String,
    pub n: usize,
    pub mean: f64,
    pub mean_error: f64,
    pub median: f64,
    pub submitted_at: DateTime<Utc>,
}

impl From<&EstimateSubmission> for CsvRow {
    fn from(s: &EstimateSubmission) -> Self {
        Self {
            student_id: s.student_id.clone(),
            n: s.n,
            mean: s.report.mean,
            mean_error: s.report.mean_error,
            median: s.report.median,
            submitted_at: s.submitted_at,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}, column {column}: {reason}")]
    Field {
        line: u64,
        column: &'static str,
        reason: String,
    },
}

/// Renders `x` like C's `%.17g`: 17 significant digits, trailing zeros
/// removed, exponent form outside `1e-4 ≤ |x| < 1e17`.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s.to_owned()
        }
    };
    if !(-4..17).contains(&exp) {
        let m = trim(&format!("{}.{}", &digits[..1], &digits[1..]));
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let body = if exp >= 0 {
        let point = exp as usize + 1;
        format!("{}.{}", &digits[..point], &digits[point..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim(&body))
}

fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Writes rows as UTF-8 CSV with LF line endings, quoting only where needed.
pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.student_id.clone(),
            r.n.to_string(),
            format_g17(r.mean),
            format_g17(r.mean_error),
            format_g17(r.median),
            format_time(&r.submitted_at),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(CsvError::Header(header));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let bad = |column: &'static str, reason: String| CsvError::Field { line, column, reason };
        let num = |i: usize, column: &'static str| {
            field(i)
                .parse::<f64>()
                .map_err(|e| bad(column, e.to_string()))
        };
        rows.push(CsvRow {
            student_id: field(0).to_owned(),
            n: field(1).parse().map_err(|e: std::num::ParseIntError| bad("n", e.to_string()))?,
            mean: num(2, "mean")?,
            mean_error: num(3, "mean_error")?,
            median: num(4, "median")?,
            submitted_at: DateTime::parse_from_rfc3339(field(5))
                .map_err(|e| bad("submitted_at", e.to_string()))?
                .with_timezone(&Utc),
        });
    }
    Ok(rows)
}

/// Accepted submissions of a session, sorted by `(student_id, n)`.
pub fn export_csv(classroom: &Classroom, session_id: &str) -> Result<String> {
    let rows: Vec<CsvRow> = classroom
        .submissions(session_id, None)?
        .iter()
        .map(CsvRow::from)
        .collect();
    Ok(render_csv(&rows))
}

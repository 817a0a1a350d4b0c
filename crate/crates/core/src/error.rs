use core::fmt;

/// Errors raised by the generation and estimation kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A distribution parameter is outside its admissible range.
    InvalidParameter {
        family: &'static str,
        reason: &'static str,
    },
    /// A uniform variate outside `[0, 1)` was passed to an inverse CDF.
    UniformOutOfRange(f64),
    /// The input has fewer elements than the operation needs.
    TooFewValues { needed: usize, got: usize },
    /// A count argument (sample size, replicates, bins) is too small.
    InvalidCount {
        what: &'static str,
        min: usize,
        got: usize,
    },
    /// A histogram range with `lo >= hi` or non-finite bounds.
    InvalidRange { lo: f64, hi: f64 },
    /// Data contains NaN or an infinity.
    NonFinite,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { family, reason } => {
                write!(f, "invalid {family} parameters: {reason}")
            }
            Error::UniformOutOfRange(u) => write!(f, "uniform variate {u} is not in [0, 1)"),
            Error::TooFewValues { needed, got } => {
                write!(f, "need at least {needed} values, got {got}")
            }
            Error::InvalidCount { what, min, got } => {
                write!(f, "{what} must be at least {min}, got {got}")
            }
            Error::InvalidRange { lo, hi } => write!(f, "invalid range [{lo}, {hi})"),
            Error::NonFinite => f.write_str("data contains non-finite values"),
        }
    }
}

impl core::error::Error for Error {}

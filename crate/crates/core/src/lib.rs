//! Reproducible per-student datasets and the estimator kernels used to
//! study sampling distributions in class.
//!
//! Everything in this crate is a pure function of its inputs. Datasets are
//! generated by inverse-transform sampling over a counter-based SplitMix64
//! stream, so the dataset of size `n` for a seed is always the first `n`
//! observations of any larger dataset for that seed.
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions
//! come from `libm` so results do not depend on the platform's math library.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod dist;
mod error;
mod normal;
mod rng;
pub mod stats;

pub use dist::{sample_prefix, Dataset, DistributionSpec, Family};
pub use error::Error;
pub use normal::inverse_standard_normal;
pub use rng::{derive_seed, splitmix64_word, uniform_at, uniform_stream, Seed, UniformStream};
pub use stats::{
    bootstrap_se, empirical_se, histogram, mean, median, sample_sd, standard_error_mean,
    EstimateReport, ProbabilityHistogram, Statistic, DEFAULT_BIN_COUNT,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;

//! Estimators, their standard errors, and probability histograms.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::{uniform_at, Seed};
use crate::{Error, Result};

/// Bin count used when a caller does not choose one.
pub const DEFAULT_BIN_COUNT: usize = 15;

fn require(data: &[f64], needed: usize) -> Result<()> {
    if data.len() < needed {
        return Err(Error::TooFewValues {
            needed,
            got: data.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

// Two passes: the second adds back the mean residual left by rounding in the
// first, so constant data returns the constant exactly.
fn mean_unchecked(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let rough = data.iter().sum::<f64>() / n;
    rough + data.iter().map(|x| x - rough).sum::<f64>() / n
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sd_unchecked(data: &[f64]) -> f64 {
    let m = mean_unchecked(data);
    let ss: f64 = data.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (data.len() - 1) as f64)
}

pub fn mean(data: &[f64]) -> Result<f64> {
    require(data, 1)?;
    Ok(mean_unchecked(data))
}

/// Middle order statistic; for even lengths, the average of the two middle ones.
pub fn median(data: &[f64]) -> Result<f64> {
    require(data, 1)?;
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(median_sorted(&sorted))
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(data: &[f64]) -> Result<f64> {
    require(data, 2)?;
    Ok(sd_unchecked(data))
}

/// `sample_sd(data) / sqrt(n)`.
pub fn standard_error_mean(data: &[f64]) -> Result<f64> {
    Ok(sample_sd(data)? / libm::sqrt(data.len() as f64))
}

/// Standard deviation of a collection of independently obtained estimates.
///
/// This is [`sample_sd`] applied to estimates rather than raw observations.
pub fn empirical_se(estimates: &[f64]) -> Result<f64> {
    sample_sd(estimates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn apply(self, data: &[f64]) -> Result<f64> {
        match self {
            Statistic::Mean => mean(data),
            Statistic::Median => median(data),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "median" => Ok(Statistic::Median),
            _ => Err(Error::InvalidParameter {
                family: "statistic",
                reason: "expected `mean` or `median`",
            }),
        }
    }
}

/// Nonparametric bootstrap standard error of `statistic`.
///
/// Replicate `r` resamples `data` with replacement using stream elements
/// `r·n .. (r+1)·n` of `seed`, picking index `floor(u·n)`. The result is the
/// `B - 1` denominator standard deviation of the `B` replicate statistics.
pub fn bootstrap_se(
    data: &[f64],
    statistic: Statistic,
    replicates: usize,
    seed: Seed,
) -> Result<f64> {
    require(data, 1)?;
    if replicates < 2 {
        return Err(Error::InvalidCount {
            what: "bootstrap replicates",
            min: 2,
            got: replicates,
        });
    }
    let n = data.len();
    let mut resample = vec![0.0; n];
    let mut stats = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let base = (r as u64).wrapping_mul(n as u64);
        for (j, slot) in resample.iter_mut().enumerate() {
            let u = uniform_at(seed, base.wrapping_add(j as u64));
            // u·n can round up to n for some n.
            let idx = ((u * n as f64) as usize).min(n - 1);
            *slot = data[idx];
        }
        stats.push(match statistic {
            Statistic::Mean => mean_unchecked(&resample),
            Statistic::Median => {
                resample.sort_unstable_by(f64::total_cmp);
                median_sorted(&resample)
            }
        });
    }
    Ok(sd_unchecked(&stats))
}

/// A student's estimates for one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub n: usize,
    pub mean: f64,
    /// Estimated standard error of the mean, `s / sqrt(n)`.
    pub mean_error: f64,
    pub median: f64,
}

impl EstimateReport {
    /// Computes the exact report for a dataset of at least two values.
    pub fn from_data(data: &[f64]) -> Result<Self> {
        Ok(EstimateReport {
            n: data.len(),
            mean: mean(data)?,
            mean_error: standard_error_mean(data)?,
            median: median(data)?,
        })
    }

    /// Checks the shape of a submitted report: finite fields, `n ≥ 1` and a
    /// nonnegative error.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidCount {
                what: "sample size",
                min: 1,
                got: 0,
            });
        }
        if !(self.mean.is_finite() && self.mean_error.is_finite() && self.median.is_finite()) {
            return Err(Error::NonFinite);
        }
        if self.mean_error < 0.0 {
            return Err(Error::InvalidParameter {
                family: "report",
                reason: "mean_error must be nonnegative",
            });
        }
        Ok(())
    }
}

/// Equal-width histogram normalised so the bar areas sum to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilityHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_values: usize,
}

impl ProbabilityHistogram {
    pub fn bin_count(&self) -> usize {
        self.densities.len()
    }

    /// `Σ density · width`; one for every histogram built from data.
    pub fn mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Probability histogram of `values` over `[lo, hi)` with `bin_count` equal bins.
///
/// Values outside the range are counted in the nearest end bin, so the total
/// mass is always one.
pub fn histogram(
    values: &[f64],
    bin_count: usize,
    lo: f64,
    hi: f64,
) -> Result<ProbabilityHistogram> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if bin_count == 0 {
        return Err(Error::InvalidCount {
            what: "bin count",
            min: 1,
            got: 0,
        });
    }
    require(values, 1)?;
    let span = hi - lo;
    let mut bin_edges: Vec<f64> = (0..bin_count)
        .map(|i| lo + span * (i as f64 / bin_count as f64))
        .collect();
    bin_edges.push(hi);
    if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        // Range too narrow to split into distinct bins at double precision.
        return Err(Error::InvalidRange { lo, hi });
    }

    let mut counts = vec![0u64; bin_count];
    for &x in values {
        let pos = (x - lo) / span * bin_count as f64;
        let idx = if pos < 0.0 {
            0
        } else {
            (pos as usize).min(bin_count - 1)
        };
        counts[idx] += 1;
    }
    let total = values.len() as f64;
    let densities = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
        .collect();
    Ok(ProbabilityHistogram {
        bin_edges,
        densities,
        counts,
        n_values: values.len(),
    })
}

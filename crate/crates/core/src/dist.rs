//! Data-generating laws and prefix-consistent dataset sampling.

use alloc::vec::Vec;
use core::fmt;

use crate::normal::inverse_standard_normal;
use crate::rng::{Seed, UniformStream};
use crate::{Error, Result};

/// Smallest uniform fed to the normal quantile; stands in for `u = 0`,
/// where the quantile is infinite. Half the spacing of the uniform grid.
const NORMAL_FLOOR: f64 = 1.0 / (1u64 << 54) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Exponential,
    Normal,
    LogNormal,
    Uniform,
}

impl Family {
    /// Number of real parameters the family takes.
    pub const fn arity(self) -> usize {
        match self {
            Family::Exponential => 1,
            _ => 2,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Normal => "normal",
            Family::LogNormal => "log_normal",
            Family::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An admissible member of one of the supported families.
///
/// Parameters are checked at construction, so every value of this type has
/// a finite theoretical mean and standard deviation.
///
/// | family        | params               |
/// |---------------|----------------------|
/// | `exponential` | `[mean]`             |
/// | `normal`      | `[mu, sigma]`        |
/// | `log_normal`  | `[mu_log, sigma_log]`|
/// | `uniform`     | `[lo, hi]`           |
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::Spec", into = "repr::Spec"))]
pub struct DistributionSpec {
    family: Family,
    params: [f64; 2],
}

impl DistributionSpec {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::InvalidParameter {
                family: family.name(),
                reason: "wrong number of parameters",
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter {
                family: family.name(),
                reason: "parameters must be finite",
            });
        }
        let mut stored = [0.0; 2];
        stored[..params.len()].copy_from_slice(params);
        let spec = DistributionSpec {
            family,
            params: stored,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(Family::Exponential, &[mean])
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::Normal, &[mu, sigma])
    }

    pub fn log_normal(mu_log: f64, sigma_log: f64) -> Result<Self> {
        Self::new(Family::LogNormal, &[mu_log, sigma_log])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform, &[lo, hi])
    }

    fn check(&self) -> Result<()> {
        let bad = |reason| {
            Err(Error::InvalidParameter {
                family: self.family.name(),
                reason,
            })
        };
        let [a, b] = self.params;
        match self.family {
            Family::Exponential if a <= 0.0 => bad("mean must be positive"),
            Family::Normal | Family::LogNormal if b <= 0.0 => bad("sigma must be positive"),
            Family::Uniform if a >= b => bad("lo must be below hi"),
            _ => {
                if self.theoretical_mean().is_finite() && self.theoretical_sd().is_finite() {
                    Ok(())
                } else {
                    bad("moments overflow double precision")
                }
            }
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params[..self.family.arity()]
    }

    pub fn theoretical_mean(&self) -> f64 {
        let [a, b] = self.params;
        match self.family {
            Family::Exponential => a,
            Family::Normal => a,
            Family::LogNormal => libm::exp(a + 0.5 * b * b),
            Family::Uniform => 0.5 * (a + b),
        }
    }

    pub fn theoretical_sd(&self) -> f64 {
        let [a, b] = self.params;
        match self.family {
            Family::Exponential => a,
            Family::Normal => b,
            Family::LogNormal => libm::sqrt(libm::expm1(b * b)) * self.theoretical_mean(),
            Family::Uniform => (b - a) / libm::sqrt(12.0),
        }
    }

    /// Whether `x` lies in the support of the law.
    pub fn supports(&self, x: f64) -> bool {
        let [a, b] = self.params;
        x.is_finite()
            && match self.family {
                Family::Exponential | Family::LogNormal => x >= 0.0,
                Family::Normal => true,
                Family::Uniform => a <= x && x < b,
            }
    }

    /// Quantile function evaluated at `u ∈ [0, 1)`.
    ///
    /// Exponential uses `-mean * ln(1 - u)`, uniform `lo + u (hi - lo)`.
    /// Normal and log-normal go through [`inverse_standard_normal`], with
    /// `u = 0` replaced by 2⁻⁵⁴ so the result stays finite.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::UniformOutOfRange(u));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        let [a, b] = self.params;
        match self.family {
            Family::Exponential => -a * libm::log(1.0 - u),
            Family::Uniform => {
                let x = a + u * (b - a);
                // Rounding can land exactly on `hi`.
                if x >= b {
                    b.next_down()
                } else {
                    x
                }
            }
            Family::Normal => a + b * inverse_standard_normal(u.max(NORMAL_FLOOR)),
            Family::LogNormal => libm::exp(a + b * inverse_standard_normal(u.max(NORMAL_FLOOR))),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, p) in self.params().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// A student's observations: the first `n` draws of the stream for `seed`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    pub values: Vec<f64>,
    pub seed: Seed,
    pub spec: DistributionSpec,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Draws `n` observations by inverse transform, one uniform per observation.
///
/// For a fixed `(spec, seed)` the result for `n₁ ≤ n₂` is a prefix of the
/// result for `n₂`.
pub fn sample_prefix(spec: &DistributionSpec, seed: Seed, n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidCount {
            what: "sample size",
            min: 1,
            got: 0,
        });
    }
    spec.check()?;
    let values = UniformStream::new(seed)
        .take(n)
        .map(|u| spec.quantile_unchecked(u))
        .collect();
    Ok(Dataset {
        values,
        seed,
        spec: *spec,
    })
}

#[cfg(feature = "serde")]
mod repr {
    use super::{DistributionSpec, Family};

    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
    pub enum Spec {
        Exponential { mean: f64 },
        Normal { mu: f64, sigma: f64 },
        LogNormal { mu_log: f64, sigma_log: f64 },
        Uniform { lo: f64, hi: f64 },
    }

    impl TryFrom<Spec> for DistributionSpec {
        type Error = crate::Error;

        fn try_from(s: Spec) -> crate::Result<Self> {
            match s {
                Spec::Exponential { mean } => DistributionSpec::exponential(mean),
                Spec::Normal { mu, sigma } => DistributionSpec::normal(mu, sigma),
                Spec::LogNormal { mu_log, sigma_log } => {
                    DistributionSpec::log_normal(mu_log, sigma_log)
                }
                Spec::Uniform { lo, hi } => DistributionSpec::uniform(lo, hi),
            }
        }
    }

    impl From<DistributionSpec> for Spec {
        fn from(d: DistributionSpec) -> Self {
            let [a, b] = d.params;
            match d.family {
                Family::Exponential => Spec::Exponential { mean: a },
                Family::Normal => Spec::Normal { mu: a, sigma: b },
                Family::LogNormal => Spec::LogNormal {
                    mu_log: a,
                    sigma_log: b,
                },
                Family::Uniform => Spec::Uniform { lo: a, hi: b },
            }
        }
    }
}

//! Conformance vector files: a JSON list of
//! `{seed, family, params, n, values}` used to compare implementations.

use std::path::Path;

use classdist_core::{derive_seed, sample_prefix, DistributionSpec, Family, Seed};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceVector {
    pub seed: u64,
    pub family: Family,
    pub params: Vec<f64>,
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConformanceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Kernel(#[from] classdist_core::Error),
    #[error("vector {index}: {reason}")]
    Mismatch { index: usize, reason: String },
}

impl ConformanceVector {
    pub fn generate(spec: &DistributionSpec, seed: Seed, n: usize) -> Result<Self, ConformanceError> {
        let ds = sample_prefix(spec, seed, n)?;
        Ok(Self {
            seed: seed.value(),
            family: spec.family(),
            params: spec.params().to_vec(),
            n,
            values: ds.values,
        })
    }

    pub fn spec(&self) -> Result<DistributionSpec, ConformanceError> {
        Ok(DistributionSpec::new(self.family, &self.params)?)
    }

    /// Regenerates the values and reports the first bit-level difference.
    pub fn check(&self) -> Result<(), String> {
        if self.values.len() != self.n {
            return Err(format!("n = {} but {} values", self.n, self.values.len()));
        }
        let spec = self.spec().map_err(|e| e.to_string())?;
        let ds = sample_prefix(&spec, Seed(self.seed), self.n).map_err(|e| e.to_string())?;
        match ds
            .values
            .iter()
            .zip(&self.values)
            .position(|(a, b)| a.to_bits() != b.to_bits())
        {
            None => Ok(()),
            Some(i) => Err(format!(
                "value {i}: expected {:e}, generated {:e}",
                self.values[i], ds.values[i]
            )),
        }
    }
}

/// A spread of families, parameters and seeds.
pub fn standard_set() -> Vec<ConformanceVector> {
    let specs = [
        DistributionSpec::exponential(50.0),
        DistributionSpec::normal(10.0, 2.5),
        DistributionSpec::log_normal(1.0, 0.75),
        DistributionSpec::uniform(-3.0, 7.0),
    ];
    let seeds = [
        derive_seed("golden", "1"),
        derive_seed("lab2024", "u42"),
        Seed(0),
        Seed(u64::MAX),
    ];
    specs
        .into_iter()
        .map(|s| s.expect("admissible"))
        .flat_map(|spec| {
            seeds
                .iter()
                .map(move |&seed| ConformanceVector::generate(&spec, seed, 100).expect("valid"))
        })
        .collect()
}

pub fn write_file(path: &Path, vectors: &[ConformanceVector]) -> Result<(), ConformanceError> {
    let mut text = serde_json::to_string_pretty(vectors)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<ConformanceVector>, ConformanceError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Checks every vector, failing on the first mismatch.
pub fn verify_all(vectors: &[ConformanceVector]) -> Result<(), ConformanceError> {
    for (index, v) in vectors.iter().enumerate() {
        v.check()
            .map_err(|reason| ConformanceError::Mismatch { index, reason })?;
    }
    Ok(())
}

//! Synthetic classes that go through the same submission path as students.

use classdist_core::{derive_seed, uniform_at, EstimateReport};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::session::Classroom;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    pub students: usize,
    /// Seeds the perturbation signs; datasets come from the session itself.
    pub seed: u64,
    /// Each field moves by `noise * max(1, |value|)`; zero submits exact values.
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub students: usize,
    pub submissions: usize,
    pub accepted: usize,
}

/// `sim-0001`, `sim-0002`, …
pub fn student_id(index: usize) -> String {
    format!("sim-{:04}", index + 1)
}

fn perturb(value: f64, noise: f64, u: f64, keep_nonnegative: bool) -> f64 {
    let step = noise * value.abs().max(1.0);
    let down = value - step;
    if u < 0.5 && !(keep_nonnegative && down < 0.0) {
        down
    } else {
        value + step
    }
}

/// The report a simulated student submits for its dataset at index `slot`.
fn simulated_report(truth: EstimateReport, plan: &SimulationPlan, student: &str, slot: u64) -> EstimateReport {
    if plan.noise == 0.0 {
        return truth;
    }
    let seed = derive_seed(&format!("simulate:{}", plan.seed), student);
    let u = |field: u64| uniform_at(seed, slot * 3 + field);
    EstimateReport {
        mean: perturb(truth.mean, plan.noise, u(0), false),
        mean_error: perturb(truth.mean_error, plan.noise, u(1), true),
        median: perturb(truth.median, plan.noise, u(2), false),
        ..truth
    }
}

/// Submits exact (or perturbed) estimates for `plan.students` synthetic
/// students at every configured size. Re-running replaces earlier rows.
pub fn run(classroom: &Classroom, session_id: &str, plan: &SimulationPlan) -> Result<SimulationReport> {
    if !(plan.noise.is_finite() && plan.noise >= 0.0) {
        return Err(Error::invalid("noise", "must be a nonnegative number"));
    }
    let config = classroom.config(session_id)?;
    let mut report = SimulationReport {
        students: plan.students,
        submissions: 0,
        accepted: 0,
    };
    for i in 0..plan.students {
        let id = student_id(i);
        for (slot, &n) in config.sample_sizes.iter().enumerate() {
            let data = classroom.assign_dataset(session_id, &id, n)?;
            let truth = EstimateReport::from_data(&data.values)?;
            let submitted = simulated_report(truth, plan, &id, slot as u64);
            let outcome = classroom.submit(session_id, &id, submitted)?;
            report.submissions += 1;
            report.accepted += usize::from(outcome.accepted);
        }
    }
    Ok(report)
}

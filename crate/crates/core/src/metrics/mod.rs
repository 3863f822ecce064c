//! Rates, failure-mode classification, diagnostic matrices and reports.

mod classify;
mod matrix;
mod report;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use classify::{classify_failure, FailureMode};
pub use matrix::{build_matrix, intervention_cell, matrix_cell_order, DiagnosticMatrix, MatrixCell};
pub use report::{build_report, AvgLenEntry, DeltaEntry, IntentionEntry, MetricReport, VariationMetrics};

use crate::episode::EpisodeLog;
use crate::error::{Error, Result};

/// A ratio with its denominator. `value` is `None` when the denominator
/// is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: Option<f64>,
    pub numerator: u32,
    pub denominator: u32,
}

impl Rate {
    pub fn new(numerator: u32, denominator: u32) -> Self {
        let value = (denominator > 0).then(|| numerator as f64 / denominator as f64);
        Self { value, numerator, denominator }
    }

    pub fn percent(&self) -> Option<f64> {
        self.value.map(|v| v * 100.0)
    }
}

fn nonempty(logs: &[&EpisodeLog]) -> Result<()> {
    if logs.is_empty() {
        return Err(Error::Precondition("no episode logs".into()));
    }
    Ok(())
}

pub fn success_rate(logs: &[&EpisodeLog]) -> Result<Rate> {
    nonempty(logs)?;
    Ok(Rate::new(logs.iter().filter(|l| l.end.success).count() as u32, logs.len() as u32))
}

/// Share of episodes whose first grasp lands on `target`. Episodes that
/// never grasp count against it.
pub fn intention_accuracy(logs: &[&EpisodeLog], target: &str) -> Result<Rate> {
    nonempty(logs)?;
    let hits = logs
        .iter()
        .filter(|l| l.end.first_grasp.as_ref().is_some_and(|g| g.instance == target))
        .count();
    Ok(Rate::new(hits as u32, logs.len() as u32))
}

/// Invalid grasps over all grasps that closed on an object.
pub fn dgr(logs: &[&EpisodeLog]) -> Rate {
    let (mut invalid, mut landed) = (0, 0);
    for g in logs.iter().flat_map(|l| l.grasps()) {
        if g.aborted {
            continue;
        }
        landed += 1;
        if !g.valid {
            invalid += 1;
        }
    }
    Rate::new(invalid, landed)
}

/// Novel success rate minus the mean of the seen ones.
pub fn delta_sr(seen: &[f64], novel: f64) -> Result<f64> {
    if seen.is_empty() {
        return Err(Error::Precondition("no seen success rates".into()));
    }
    Ok(novel - seen.iter().sum::<f64>() / seen.len() as f64)
}

/// Expected number of chained subtasks completed in a row, from the
/// success rate at each chain position.
pub fn avg_len(rates: &[f64]) -> Result<f64> {
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Precondition(format!("rate {r} outside [0, 1]")));
    }
    Ok(rates.iter().sum())
}

/// Fraction of episodes that completed at least the first k+1 subgoals of
/// `order`, each before the next, for every k. A subgoal already done at
/// reset counts wherever it sits.
pub fn chain_rates(logs: &[&EpisodeLog], order: &[alloc::string::String]) -> Vec<f64> {
    if logs.is_empty() {
        return Vec::new();
    }
    let mut counts = alloc::vec![0u32; order.len()];
    for l in logs {
        let ledger = &l.frames().last().expect("reset frame").ledger;
        let done_at = |id: &str| ledger.iter().find(|e| e.subgoal_id == id).and_then(|e| e.done_at);
        let mut prev = 0;
        for (k, id) in order.iter().enumerate() {
            match done_at(id) {
                Some(0) => counts[k] += 1,
                Some(t) if t >= prev => {
                    prev = t;
                    counts[k] += 1;
                }
                _ => break,
            }
        }
    }
    counts.iter().map(|c| *c as f64 / logs.len() as f64).collect()
}

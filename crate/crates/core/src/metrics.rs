//! Load imbalance, per-process loads and the simulated makespan.

use crate::distribution::WeightMap;
use crate::error::{Error, Result};
use crate::grid::{Assignment, BlockGrid};

/// Balance state of one rebalancing interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub step: u64,
    pub strategy: String,
    /// Per-process loads in ms.
    pub loads: Vec<f64>,
    pub load_imbalance: f64,
    pub edge_cut: u64,
    /// The interval's makespan contribution.
    pub max_load: f64,
    pub total_load: f64,
}

impl IntervalReport {
    pub fn new(step: u64, strategy: impl Into<String>, loads: Vec<f64>, edge_cut: u64) -> Result<Self> {
        let load_imbalance = load_imbalance(&loads)?;
        let max_load = loads.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total_load = loads.iter().sum();
        Ok(IntervalReport {
            step,
            strategy: strategy.into(),
            loads,
            load_imbalance,
            edge_cut,
            max_load,
            total_load,
        })
    }

    pub fn n_procs(&self) -> usize {
        self.loads.len()
    }
}

pub fn process_loads(
    grid: &BlockGrid,
    assignment: &Assignment,
    weights: &WeightMap,
) -> Result<Vec<f64>> {
    assignment.check_grid(grid)?;
    weights.check_grid(grid)?;
    Ok(crate::distribution::loads_of(
        weights,
        assignment.owners(),
        assignment.n_procs(),
    ))
}

/// Maximum over mean load, minus one.
pub fn load_imbalance(loads: &[f64]) -> Result<f64> {
    if loads.is_empty() {
        return Err(Error::invalid("load imbalance of an empty load list"));
    }
    if loads.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("loads must be finite and non-negative"));
    }
    let total: f64 = loads.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("load imbalance of zero total load"));
    }
    let max = loads.iter().copied().fold(0.0, f64::max);
    let mean = total / loads.len() as f64;
    Ok((max / mean - 1.0).max(0.0))
}

/// Sum of per-interval maximum loads: the time-to-solution if every
/// interval waits for its slowest process and rebalancing is free.
pub fn simulated_makespan(reports: &[IntervalReport]) -> f64 {
    reports.iter().map(|r| r.max_load).sum()
}

//! Replays a scenario under a balancing strategy and scores every
//! rebalancing interval.

use std::fmt;
use std::str::FromStr;

use crate::distribution::{
    diffusive_balance, edge_cut, refine_partition, sfc_partition, CurveKind, WeightMap,
    DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::estimator::{block_weight, EstimatorCoefficients, DEFAULT_WEIGHT_FLOOR};
use crate::grid::{Assignment, BlockGrid};
use crate::metrics::{process_loads, simulated_makespan, IntervalReport};
use crate::scenario::{quantity_trace, synthesize_timings, QuantitySnapshot, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Keep the initial uniform-weight Hilbert partition.
    None,
    Morton,
    Hilbert,
    /// Diffusive exchange starting from the previous interval's assignment.
    Diffusive,
    /// Hilbert partition followed by edge-cut refinement.
    Refine,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::None,
        Strategy::Morton,
        Strategy::Hilbert,
        Strategy::Diffusive,
        Strategy::Refine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Morton => "morton",
            Strategy::Hilbert => "hilbert",
            Strategy::Diffusive => "diffusive",
            Strategy::Refine => "refine",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown strategy '{s}' (expected none, morton, hilbert, diffusive or refine)"
                ))
            })
    }
}

/// What the per-process loads of an interval are computed from.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadSource {
    /// The same predicted weights the partitioner saw.
    Predicted,
    /// Noisy timings synthesized from separate "true" coefficients, so
    /// prediction error shows up in the score.
    Synthesized {
        truth: EstimatorCoefficients,
        sigma: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOptions {
    pub n_procs: usize,
    /// Time steps between rebalancing.
    pub interval: u64,
    pub tolerance: f64,
    pub diffusive_iters: usize,
    pub weight_floor: f64,
    /// Coefficients used to predict block weights.
    pub coefficients: EstimatorCoefficients,
    pub loads: LoadSource,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            n_procs: 8,
            interval: 100,
            tolerance: DEFAULT_TOLERANCE,
            diffusive_iters: 100,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            coefficients: EstimatorCoefficients::reference_profile(),
            loads: LoadSource::Predicted,
        }
    }
}

impl ReplayOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_procs == 0 {
            return Err(Error::invalid("process count must be >= 1"));
        }
        if self.interval == 0 {
            return Err(Error::invalid("rebalancing interval must be >= 1"));
        }
        if !(self.tolerance >= 1.0) {
            return Err(Error::invalid(format!(
                "imbalance tolerance must be >= 1, got {}",
                self.tolerance
            )));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::invalid("weight floor must be positive"));
        }
        if !self.coefficients.is_finite() {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(())
    }
}

/// Block quantities at step 0 and every `interval` steps of the scenario.
pub fn record_trace(config: &ScenarioConfig, interval: u64) -> Result<Vec<QuantitySnapshot>> {
    quantity_trace(config, interval)
}

/// Scores `strategy` on a recorded trace; one report per snapshot.
pub fn replay_trace(
    grid: &BlockGrid,
    trace: &[QuantitySnapshot],
    strategy: Strategy,
    opts: &ReplayOptions,
) -> Result<Vec<IntervalReport>> {
    opts.validate()?;
    if trace.is_empty() {
        return Err(Error::invalid("empty quantity trace"));
    }
    if let Some(s) = trace.iter().find(|s| s.quantities.len() != grid.len()) {
        return Err(Error::invalid(format!(
            "snapshot at step {} has {} blocks, grid has {}",
            s.step,
            s.quantities.len(),
            grid.len()
        )));
    }
    if opts.n_procs > grid.len() {
        return Err(Error::invalid(format!(
            "{} processes for {} blocks",
            opts.n_procs,
            grid.len()
        )));
    }

    let measured = match &opts.loads {
        LoadSource::Predicted => None,
        LoadSource::Synthesized { truth, sigma, seed } => {
            Some(synthesize_timings(trace, truth, *sigma, *seed)?)
        }
    };

    let initial = sfc_partition(grid, &WeightMap::uniform(grid), opts.n_procs, CurveKind::Hilbert)?;
    let mut previous = initial.clone();
    let mut reports = Vec::with_capacity(trace.len());
    for (t, snap) in trace.iter().enumerate() {
        let predicted = WeightMap::new(
            grid,
            snap.quantities
                .iter()
                .map(|q| block_weight(q, &opts.coefficients, opts.weight_floor))
                .collect(),
        )?;
        let assignment: Assignment = match strategy {
            Strategy::None => initial.clone(),
            Strategy::Morton => sfc_partition(grid, &predicted, opts.n_procs, CurveKind::Morton)?,
            Strategy::Hilbert => sfc_partition(grid, &predicted, opts.n_procs, CurveKind::Hilbert)?,
            Strategy::Diffusive => diffusive_balance(grid, &predicted, &previous, opts.diffusive_iters)?.0,
            Strategy::Refine => {
                let start = sfc_partition(grid, &predicted, opts.n_procs, CurveKind::Hilbert)?;
                refine_partition(grid, &predicted, &start, opts.tolerance)?
            }
        };
        let loads = match &measured {
            None => process_loads(grid, &assignment, &predicted)?,
            Some(samples) => {
                let chunk = &samples[t * grid.len()..(t + 1) * grid.len()];
                let mut loads = vec![0.0; opts.n_procs];
                for s in chunk {
                    loads[assignment.owner(s.block_id)] += s.m_tot();
                }
                loads
            }
        };
        let cut = edge_cut(grid, &assignment)?;
        reports.push(IntervalReport::new(snap.step, strategy.name(), loads, cut)?);
        previous = assignment;
    }
    Ok(reports)
}

/// Runs the scenario and scores `strategy`, rebalancing every
/// `opts.interval` steps.
pub fn replay(config: &ScenarioConfig, strategy: Strategy, opts: &ReplayOptions) -> Result<Vec<IntervalReport>> {
    opts.validate()?;
    let trace = record_trace(config, opts.interval)?;
    replay_trace(&config.grid(), &trace, strategy, opts)
}

/// Aggregate scores of one replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub strategy: String,
    pub intervals: usize,
    pub mean_load_imbalance: f64,
    pub median_load_imbalance: f64,
    pub makespan: f64,
    pub mean_edge_cut: f64,
}

pub fn summarize(reports: &[IntervalReport]) -> Result<ReplaySummary> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("summary of an empty report list"))?;
    let n = reports.len() as f64;
    let li: Vec<f64> = reports.iter().map(|r| r.load_imbalance).collect();
    let (median, _) = crate::estimator::summary_stats(&li)?;
    Ok(ReplaySummary {
        strategy: first.strategy.clone(),
        intervals: reports.len(),
        mean_load_imbalance: li.iter().sum::<f64>() / n,
        median_load_imbalance: median,
        makespan: simulated_makespan(reports),
        mean_edge_cut: reports.iter().map(|r| r.edge_cut as f64).sum::<f64>() / n,
    })
}

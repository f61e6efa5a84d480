//! Turning block weights into block → process assignments.
//!
//! Three families are provided: greedy segmentation of a space-filling
//! curve ([`sfc_partition`]), local diffusive exchange between neighbouring
//! processes ([`diffusive_balance`]) and an edge-cut refiner that keeps
//! every process under a load tolerance ([`refine_partition`]).

mod curve;
mod diffusive;
mod graph;
mod refine;
mod sfc;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{BlockGrid, BlockId};

pub use curve::{
    curve_order, enclosing_order, hilbert_coords, hilbert_index, morton_index, MAX_ORDER,
};
pub use diffusive::{diffusive_balance, diffusive_step};
pub use graph::{edge_cut, edge_weight};
pub use refine::refine_partition;
pub use sfc::{greedy_segments, sfc_partition};

/// Imbalance tolerance used by graph partitioners by default.
pub const DEFAULT_TOLERANCE: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Morton,
    Hilbert,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Morton => "morton",
            CurveKind::Hilbert => "hilbert",
        })
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "morton" => Ok(CurveKind::Morton),
            "hilbert" => Ok(CurveKind::Hilbert),
            _ => Err(Error::invalid(format!("unknown curve kind '{s}'"))),
        }
    }
}

/// Positive weight (ms) for every block of a grid, indexed by block id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap(Vec<f64>);

impl WeightMap {
    pub fn new(grid: &BlockGrid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} blocks",
                weights.len(),
                grid.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::invalid(format!(
                "block {i} has non-positive weight {w}"
            )));
        }
        Ok(WeightMap(weights))
    }

    pub fn uniform(grid: &BlockGrid) -> Self {
        WeightMap(vec![1.0; grid.len()])
    }

    pub fn get(&self, id: BlockId) -> f64 {
        self.0[id.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_grid(&self, grid: &BlockGrid) -> Result<()> {
        if self.0.len() != grid.len() {
            return Err(Error::invalid(format!(
                "weight map covers {} blocks but grid has {}",
                self.0.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Per-process sums of block weights, accumulated in block-id order.
pub(crate) fn loads_of(weights: &WeightMap, owners: &[usize], n_procs: usize) -> Vec<f64> {
    let mut loads = vec![0.0; n_procs];
    for (w, &o) in weights.0.iter().zip(owners) {
        loads[o] += w;
    }
    loads
}

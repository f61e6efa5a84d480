use super::{curve_order, CurveKind, WeightMap};
use crate::error::{Error, Result};
use crate::grid::{Assignment, BlockGrid};

/// Splits a sequence of positive weights into `n_procs` contiguous segments.
///
/// With target `T = total / n_procs`, the current process keeps taking
/// blocks while the running total plus half the next block stays within its
/// cumulative target `(p + 1)·T`. Comparing against the block midpoint keeps
/// the overshoot from piling up on the last process. A process is never
/// left empty: it always takes at least one block, and processes are
/// advanced early when the remaining blocks are just enough to give each
/// remaining process one.
///
/// Returns the process of every position.
pub fn greedy_segments(weights: &[f64], n_procs: usize) -> Result<Vec<usize>> {
    if n_procs == 0 {
        return Err(Error::invalid("process count must be >= 1"));
    }
    if n_procs > weights.len() {
        return Err(Error::invalid(format!(
            "{n_procs} processes for {} blocks",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!("non-positive block weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    let target = total / n_procs as f64;

    let mut out = Vec::with_capacity(weights.len());
    let mut proc = 0;
    let mut proc_blocks = 0usize;
    let mut cumulative = 0.0;
    for (pos, &w) in weights.iter().enumerate() {
        if proc + 1 < n_procs && proc_blocks > 0 {
            let remaining_blocks = weights.len() - pos;
            let remaining_procs = n_procs - proc - 1;
            let over = cumulative + 0.5 * w > (proc + 1) as f64 * target;
            if over || remaining_blocks == remaining_procs {
                proc += 1;
                proc_blocks = 0;
            }
        }
        out.push(proc);
        proc_blocks += 1;
        cumulative += w;
    }
    Ok(out)
}

/// Greedy segmentation of the blocks along a space-filling curve.
pub fn sfc_partition(
    grid: &BlockGrid,
    weights: &WeightMap,
    n_procs: usize,
    kind: CurveKind,
) -> Result<Assignment> {
    weights.check_grid(grid)?;
    let order = curve_order(grid, kind);
    let seq: Vec<f64> = order.iter().map(|&id| weights.get(id)).collect();
    let procs = greedy_segments(&seq, n_procs)?;
    let mut owner = vec![0; grid.len()];
    for (id, p) in order.into_iter().zip(procs) {
        owner[id.index()] = p;
    }
    Assignment::new(grid, n_procs, owner)
}

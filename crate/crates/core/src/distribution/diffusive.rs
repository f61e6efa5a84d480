use std::collections::BTreeMap;

use super::{loads_of, WeightMap};
use crate::error::Result;
use crate::grid::{Assignment, BlockGrid, BlockId};

/// One sweep of neighbour-to-neighbour load diffusion.
///
/// Processes are visited in index order with loads updated as blocks move.
/// A process with load `L_p` considers its neighbouring processes from the
/// least loaded upwards; for the first neighbour `q` with `Δ = L_p − L_q > 0`
/// that admits a move, it sends the boundary block adjacent to `q` whose
/// weight is closest to `Δ/2` among those strictly lighter than `Δ` (ties go
/// to the lowest block id). Each process sends at most one block per sweep
/// and never gives away its last block.
///
/// A move of weight `w < Δ` leaves both loads below the sender's old load,
/// so the maximum load never increases, and it lowers `Σ load²` by
/// `2w(Δ − w)`, so repeated sweeps reach a fixed point.
pub fn diffusive_step(
    grid: &BlockGrid,
    weights: &WeightMap,
    assignment: &Assignment,
) -> Result<Assignment> {
    assignment.check_grid(grid)?;
    weights.check_grid(grid)?;
    let n_procs = assignment.n_procs();
    let mut out = assignment.clone();
    let mut loads = loads_of(weights, out.owners(), n_procs);
    let mut counts = out.block_counts();

    for p in 0..n_procs {
        if counts[p] <= 1 {
            continue;
        }
        // boundary blocks of p, keyed by the neighbouring process they touch
        let mut frontier: BTreeMap<usize, Vec<BlockId>> = BTreeMap::new();
        let owners = out.owners();
        for id in grid.ids().filter(|&id| owners[id.index()] == p) {
            grid.for_each_neighbor(id, |n, _| {
                let q = owners[n.index()];
                if q != p {
                    let blocks = frontier.entry(q).or_default();
                    if blocks.last() != Some(&id) {
                        blocks.push(id);
                    }
                }
            });
        }
        let mut targets: Vec<usize> = frontier.keys().copied().collect();
        targets.sort_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(a.cmp(&b)));

        for q in targets {
            let delta = loads[p] - loads[q];
            if delta <= 0.0 {
                break;
            }
            let half = 0.5 * delta;
            let pick = frontier[&q]
                .iter()
                .copied()
                .filter(|&b| weights.get(b) < delta)
                .min_by(|&a, &b| {
                    (weights.get(a) - half)
                        .abs()
                        .total_cmp(&(weights.get(b) - half).abs())
                        .then(a.cmp(&b))
                });
            if let Some(b) = pick {
                let w = weights.get(b);
                out.set_owner(b, q);
                loads[p] -= w;
                loads[q] += w;
                counts[p] -= 1;
                counts[q] += 1;
                break;
            }
        }
    }
    Ok(out)
}

/// Repeats [`diffusive_step`] until nothing moves or `max_iters` sweeps have
/// run. Returns the final assignment and the number of sweeps that moved at
/// least one block.
pub fn diffusive_balance(
    grid: &BlockGrid,
    weights: &WeightMap,
    assignment: &Assignment,
    max_iters: usize,
) -> Result<(Assignment, usize)> {
    assignment.check_grid(grid)?;
    weights.check_grid(grid)?;
    let mut current = assignment.clone();
    let mut effective = 0;
    for _ in 0..max_iters {
        let next = diffusive_step(grid, weights, &current)?;
        if next == current {
            break;
        }
        current = next;
        effective += 1;
    }
    Ok((current, effective))
}

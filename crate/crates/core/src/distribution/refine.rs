use super::graph::block_cut;
use super::{loads_of, WeightMap};
use crate::error::{Error, Result};
use crate::grid::{Assignment, BlockGrid, BlockId};

#[derive(Debug, Clone, Copy)]
enum Move {
    Single { block: BlockId, to: usize },
    Swap { a: BlockId, b: BlockId },
}

/// Greedy edge-cut refinement under a load bound.
///
/// Each round evaluates every single-block move of a boundary block to a
/// neighbouring process and every exchange of two adjacent blocks owned by
/// different processes, then applies the candidate with the largest cut
/// reduction among those that keep all affected process loads within
/// `tolerance · total / n_procs` and leave no process empty. Ties keep the
/// first candidate in block-id order. The cut strictly decreases with every
/// accepted candidate, so the loop ends at a local optimum.
///
/// Start assignments that already exceed the bound are accepted; only the
/// moves are constrained.
pub fn refine_partition(
    grid: &BlockGrid,
    weights: &WeightMap,
    assignment: &Assignment,
    tolerance: f64,
) -> Result<Assignment> {
    assignment.check_grid(grid)?;
    weights.check_grid(grid)?;
    if !(tolerance >= 1.0) {
        return Err(Error::invalid(format!(
            "imbalance tolerance must be >= 1, got {tolerance}"
        )));
    }
    let n_procs = assignment.n_procs();
    let bound = tolerance * weights.total() / n_procs as f64;
    let mut out = assignment.clone();
    let mut loads = loads_of(weights, out.owners(), n_procs);
    let mut counts = out.block_counts();

    loop {
        let owners = out.owners().to_vec();
        let mut best: Option<(u64, Move)> = None;
        let mut consider = |gain: u64, mv: Move| {
            if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mv));
            }
        };

        for id in grid.ids() {
            let p = owners[id.index()];
            let w = weights.get(id);
            let here = block_cut(grid, &owners, id, p);

            let mut seen = Vec::with_capacity(4);
            grid.for_each_neighbor(id, |n, _| {
                let q = owners[n.index()];
                if q != p && !seen.contains(&q) {
                    seen.push(q);
                }
            });
            seen.sort_unstable();
            if counts[p] > 1 {
                for &q in &seen {
                    if loads[q] + w <= bound {
                        let there = block_cut(grid, &owners, id, q);
                        if there < here {
                            consider(here - there, Move::Single { block: id, to: q });
                        }
                    }
                }
            }

            let mut partners = Vec::new();
            grid.for_each_neighbor(id, |n, _| {
                if n > id && owners[n.index()] != p {
                    partners.push(n);
                }
            });
            for n in partners {
                let q = owners[n.index()];
                let wn = weights.get(n);
                if loads[p] - w + wn > bound || loads[q] - wn + w > bound {
                    continue;
                }
                let before = here + block_cut(grid, &owners, n, q)
                    - block_pair_weight(grid, id, n);
                let mut swapped = owners.clone();
                swapped[id.index()] = q;
                swapped[n.index()] = p;
                let after = block_cut(grid, &swapped, id, q) + block_cut(grid, &swapped, n, p)
                    - block_pair_weight(grid, id, n);
                if after < before {
                    consider(before - after, Move::Swap { a: id, b: n });
                }
            }
        }

        let Some((_, mv)) = best else { break };
        match mv {
            Move::Single { block, to } => {
                let from = owners[block.index()];
                let w = weights.get(block);
                out.set_owner(block, to);
                loads[from] -= w;
                loads[to] += w;
                counts[from] -= 1;
                counts[to] += 1;
            }
            Move::Swap { a, b } => {
                let (pa, pb) = (owners[a.index()], owners[b.index()]);
                let (wa, wb) = (weights.get(a), weights.get(b));
                out.set_owner(a, pb);
                out.set_owner(b, pa);
                loads[pa] += wb - wa;
                loads[pb] += wa - wb;
            }
        }
    }
    Ok(out)
}

/// Edge weight between two blocks known to be adjacent.
fn block_pair_weight(grid: &BlockGrid, a: BlockId, b: BlockId) -> u64 {
    let mut w = 0;
    grid.for_each_neighbor(a, |n, class| {
        if n == b {
            w = super::edge_weight(class, grid.block_size());
        }
    });
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::edge_cut;

    /// Every 2-process assignment of the 2x2x1 grid with two blocks each.
    fn balanced_two_way(g: &BlockGrid) -> Vec<Assignment> {
        (0u32..16)
            .filter(|m| m.count_ones() == 2)
            .map(|m| Assignment::new(g, 2, (0..4).map(|i| ((m >> i) & 1) as usize).collect()).unwrap())
            .collect()
    }

    #[test]
    fn checkerboard_reaches_enumerated_optimum() {
        let g = BlockGrid::new([2, 2, 1], 32).unwrap();
        let w = WeightMap::uniform(&g);
        let optimum = balanced_two_way(&g)
            .iter()
            .map(|a| edge_cut(&g, a).unwrap())
            .min()
            .unwrap();
        let checker = Assignment::new(&g, 2, vec![0, 1, 1, 0]).unwrap();
        let before = edge_cut(&g, &checker).unwrap();
        let out = refine_partition(&g, &w, &checker, 1.05).unwrap();
        let after = edge_cut(&g, &out).unwrap();
        assert!(after < before);
        assert_eq!(after, optimum);
        // two-column split
        assert_eq!(out.owner(BlockId(0)), out.owner(BlockId(2)));
        assert_eq!(out.owner(BlockId(1)), out.owner(BlockId(3)));
    }

    #[test]
    fn local_optimum_is_fixed_point() {
        let g = BlockGrid::new([4, 1, 1], 8).unwrap();
        let w = WeightMap::uniform(&g);
        let a = Assignment::new(&g, 2, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(refine_partition(&g, &w, &a, 1.05).unwrap(), a);
    }

    #[test]
    fn loose_tolerance_merges_for_zero_cut_only_if_nonempty() {
        // with an unbounded tolerance the refiner would like to merge, but
        // the last block of a process never moves
        let g = BlockGrid::new([2, 1, 1], 8).unwrap();
        let w = WeightMap::uniform(&g);
        let a = Assignment::new(&g, 2, vec![0, 1]).unwrap();
        assert_eq!(refine_partition(&g, &w, &a, 10.0).unwrap(), a);
    }

    #[test]
    fn rejects_tolerance_below_one() {
        let g = BlockGrid::new([2, 1, 1], 8).unwrap();
        let w = WeightMap::uniform(&g);
        assert!(refine_partition(&g, &w, &Assignment::single(&g), 0.9).is_err());
    }
}

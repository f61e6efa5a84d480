use crate::error::Result;
use crate::grid::{AdjacencyClass, Assignment, BlockGrid, BlockId};

/// Communication volume between two touching blocks of `block_size³` cells:
/// a face exchanges a full layer, an edge one row, a corner one cell.
pub fn edge_weight(class: AdjacencyClass, block_size: usize) -> u64 {
    let b = block_size as u64;
    match class {
        AdjacencyClass::Face => b * b,
        AdjacencyClass::Edge => b,
        AdjacencyClass::Corner => 1,
    }
}

/// Sum of edge weights over unordered adjacent block pairs owned by
/// different processes.
pub fn edge_cut(grid: &BlockGrid, assignment: &Assignment) -> Result<u64> {
    assignment.check_grid(grid)?;
    let owners = assignment.owners();
    let mut cut = 0;
    for id in grid.ids() {
        grid.for_each_neighbor(id, |n, class| {
            if n > id && owners[n.index()] != owners[id.index()] {
                cut += edge_weight(class, grid.block_size());
            }
        });
    }
    Ok(cut)
}

/// Cut weight between `id` and its neighbours if `id` were owned by `owner`.
pub(crate) fn block_cut(grid: &BlockGrid, owners: &[usize], id: BlockId, owner: usize) -> u64 {
    let mut cut = 0;
    grid.for_each_neighbor(id, |n, class| {
        if owners[n.index()] != owner {
            cut += edge_weight(class, grid.block_size());
        }
    });
    cut
}

//! Block lattice, block adjacency, per-block quantities and block ownership.
//!
//! Blocks are cubes of `block_size³` cells laid out on a non-periodic
//! `dims.x × dims.y × dims.z` lattice. Ids are linear with `i` running
//! fastest, so iterating ids visits blocks k-major, then j, then i.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Linear block index into a [`BlockGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

impl BlockId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    dims: [usize; 3],
    block_size: usize,
}

/// How two distinct blocks of the 26-neighbourhood touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdjacencyClass {
    Face,
    Edge,
    Corner,
}

impl AdjacencyClass {
    fn from_offset(d: [isize; 3]) -> Option<Self> {
        match d.iter().filter(|&&c| c != 0).count() {
            1 => Some(AdjacencyClass::Face),
            2 => Some(AdjacencyClass::Edge),
            3 => Some(AdjacencyClass::Corner),
            _ => None,
        }
    }
}

impl BlockGrid {
    pub fn new(dims: [usize; 3], block_size: usize) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!(
                "grid dimensions must be >= 1, got {dims:?}"
            )));
        }
        if block_size == 0 {
            return Err(Error::invalid("block size must be >= 1"));
        }
        Ok(BlockGrid { dims, block_size })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn cells_per_block(&self) -> u64 {
        (self.block_size as u64).pow(3)
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Domain extents in cells.
    pub fn extents(&self) -> [f64; 3] {
        self.dims.map(|d| (d * self.block_size) as f64)
    }

    pub fn ids(&self) -> impl Iterator<Item = BlockId> + '_ {
        (0..self.len()).map(BlockId)
    }

    pub fn contains(&self, id: BlockId) -> bool {
        id.0 < self.len()
    }

    pub fn id_of(&self, coord: [usize; 3]) -> Result<BlockId> {
        if coord.iter().zip(&self.dims).any(|(&c, &d)| c >= d) {
            return Err(Error::invalid(format!(
                "block coordinate {coord:?} outside grid {:?}",
                self.dims
            )));
        }
        Ok(BlockId(
            coord[0] + self.dims[0] * (coord[1] + self.dims[1] * coord[2]),
        ))
    }

    pub fn coord_of(&self, id: BlockId) -> Result<[usize; 3]> {
        self.check(id)?;
        Ok(self.coord_unchecked(id))
    }

    pub(crate) fn coord_unchecked(&self, id: BlockId) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [id.0 % nx, (id.0 / nx) % ny, id.0 / (nx * ny)]
    }

    pub(crate) fn check(&self, id: BlockId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "block id {id} outside grid of {} blocks",
                self.len()
            )))
        }
    }

    /// Every in-bounds block touching `id` by a face, edge or corner, in
    /// k-major offset order.
    pub fn neighbors(&self, id: BlockId) -> Result<Vec<(BlockId, AdjacencyClass)>> {
        self.check(id)?;
        let mut out = Vec::with_capacity(26);
        self.for_each_neighbor(id, |n, class| out.push((n, class)));
        Ok(out)
    }

    /// Allocation-free neighbour walk; `id` must be valid.
    pub(crate) fn for_each_neighbor(&self, id: BlockId, mut f: impl FnMut(BlockId, AdjacencyClass)) {
        let c = self.coord_unchecked(id);
        for dk in -1isize..=1 {
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let Some(class) = AdjacencyClass::from_offset([di, dj, dk]) else {
                        continue;
                    };
                    let n = [c[0] as isize + di, c[1] as isize + dj, c[2] as isize + dk];
                    if n.iter().zip(&self.dims).any(|(&v, &d)| v < 0 || v >= d as isize) {
                        continue;
                    }
                    let n = n.map(|v| v as usize);
                    f(
                        BlockId(n[0] + self.dims[0] * (n[1] + self.dims[1] * n[2])),
                        class,
                    );
                }
            }
        }
    }
}

/// The state of one block as seen by the workload estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockQuantities {
    /// Total cells.
    pub cells: u64,
    /// Cells flagged fluid.
    pub fluid: u64,
    /// Fluid cells next to a solid cell.
    pub near_boundary: u64,
    pub local_particles: u64,
    pub shadow_particles: u64,
    pub contacts: u64,
    pub sub_cycles: u64,
}

impl BlockQuantities {
    pub fn validate(&self) -> Result<()> {
        if self.fluid > self.cells {
            return Err(Error::invalid(format!(
                "fluid cells {} exceed cell count {}",
                self.fluid, self.cells
            )));
        }
        if self.near_boundary > self.fluid {
            return Err(Error::invalid(format!(
                "near-boundary cells {} exceed fluid cells {}",
                self.near_boundary, self.fluid
            )));
        }
        Ok(())
    }
}

/// Problems found by [`validate_assignment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnassignedBlock(BlockId),
    DuplicateEntry(BlockId),
    UnknownBlock(BlockId),
    OwnerOutOfRange { block: BlockId, owner: usize },
    NoProcesses,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnassignedBlock(b) => write!(f, "unassigned block {b}"),
            Violation::DuplicateEntry(b) => write!(f, "duplicate entry for block {b}"),
            Violation::UnknownBlock(b) => write!(f, "unknown block {b}"),
            Violation::OwnerOutOfRange { block, owner } => {
                write!(f, "owner out of range: block {block} -> process {owner}")
            }
            Violation::NoProcesses => write!(f, "process count must be >= 1"),
        }
    }
}

/// Checks a raw `(block, owner)` listing against the grid. An empty result
/// means the listing describes a valid [`Assignment`].
pub fn validate_assignment(
    grid: &BlockGrid,
    n_procs: usize,
    entries: &[(BlockId, usize)],
) -> Vec<Violation> {
    let mut violations = Vec::new();
    if n_procs == 0 {
        violations.push(Violation::NoProcesses);
    }
    let mut seen = vec![false; grid.len()];
    for &(block, owner) in entries {
        if !grid.contains(block) {
            violations.push(Violation::UnknownBlock(block));
            continue;
        }
        if std::mem::replace(&mut seen[block.0], true) {
            violations.push(Violation::DuplicateEntry(block));
        }
        if owner >= n_procs {
            violations.push(Violation::OwnerOutOfRange { block, owner });
        }
    }
    violations.extend(
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(i, _)| Violation::UnassignedBlock(BlockId(i))),
    );
    violations
}

/// Total block → process map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    n_procs: usize,
    owner: Vec<usize>,
}

impl Assignment {
    /// Builds an assignment from a dense owner vector indexed by block id.
    pub fn new(grid: &BlockGrid, n_procs: usize, owner: Vec<usize>) -> Result<Self> {
        if owner.len() != grid.len() {
            return Err(Error::invalid(format!(
                "owner vector has {} entries for {} blocks",
                owner.len(),
                grid.len()
            )));
        }
        let entries: Vec<_> = owner.iter().enumerate().map(|(i, &o)| (BlockId(i), o)).collect();
        Self::from_entries(grid, n_procs, &entries)
    }

    pub fn from_entries(
        grid: &BlockGrid,
        n_procs: usize,
        entries: &[(BlockId, usize)],
    ) -> Result<Self> {
        let violations = validate_assignment(grid, n_procs, entries);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::invalid(msg.join("; ")));
        }
        let mut owner = vec![0; grid.len()];
        for &(b, o) in entries {
            owner[b.0] = o;
        }
        Ok(Assignment { n_procs, owner })
    }

    /// Every block on process 0.
    pub fn single(grid: &BlockGrid) -> Self {
        Assignment {
            n_procs: 1,
            owner: vec![0; grid.len()],
        }
    }

    pub fn n_procs(&self) -> usize {
        self.n_procs
    }

    pub fn owner(&self, id: BlockId) -> usize {
        self.owner[id.0]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub(crate) fn set_owner(&mut self, id: BlockId, proc: usize) {
        debug_assert!(proc < self.n_procs);
        self.owner[id.0] = proc;
    }

    /// Block counts per process.
    pub fn block_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_procs];
        for &o in &self.owner {
            counts[o] += 1;
        }
        counts
    }

    /// Errors unless the assignment covers exactly the blocks of `grid`.
    pub fn check_grid(&self, grid: &BlockGrid) -> Result<()> {
        if self.owner.len() != grid.len() {
            return Err(Error::invalid(format!(
                "assignment covers {} blocks but grid has {}",
                self.owner.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    pub fn as_map(&self) -> HashMap<BlockId, usize> {
        self.owner
            .iter()
            .enumerate()
            .map(|(i, &o)| (BlockId(i), o))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census(grid: &BlockGrid, id: BlockId) -> [usize; 3] {
        let mut c = [0; 3];
        for (_, class) in grid.neighbors(id).unwrap() {
            c[class as usize] += 1;
        }
        c
    }

    #[test]
    fn build_grid_examples() {
        let g = BlockGrid::new([1, 1, 1], 32).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.cells_per_block(), 32768);
        assert_eq!(BlockGrid::new([4, 4, 5], 32).unwrap().len(), 80);
        assert_eq!(BlockGrid::new([12, 12, 16], 32).unwrap().len(), 2304);
    }

    #[test]
    fn build_grid_rejects_zero() {
        assert!(matches!(
            BlockGrid::new([0, 1, 1], 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(BlockGrid::new([1, 1, 1], 0).is_err());
    }

    #[test]
    fn ids_are_k_major() {
        let g = BlockGrid::new([3, 2, 2], 1).unwrap();
        assert_eq!(g.coord_of(BlockId(0)).unwrap(), [0, 0, 0]);
        assert_eq!(g.coord_of(BlockId(1)).unwrap(), [1, 0, 0]);
        assert_eq!(g.coord_of(BlockId(3)).unwrap(), [0, 1, 0]);
        assert_eq!(g.coord_of(BlockId(6)).unwrap(), [0, 0, 1]);
        assert!(g.coord_of(BlockId(12)).is_err());
    }

    #[test]
    fn id_round_trip_exhaustive() {
        for dims in [[1, 1, 1], [3, 2, 5], [4, 4, 4], [5, 1, 3]] {
            let g = BlockGrid::new(dims, 2).unwrap();
            let mut seen = vec![false; g.len()];
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let id = g.id_of([i, j, k]).unwrap();
                        assert!(!seen[id.0]);
                        seen[id.0] = true;
                        assert_eq!(g.coord_of(id).unwrap(), [i, j, k]);
                    }
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn neighbor_examples() {
        let g = BlockGrid::new([3, 3, 3], 8).unwrap();
        let centre = g.id_of([1, 1, 1]).unwrap();
        assert_eq!(census(&g, centre), [6, 12, 8]);

        let g = BlockGrid::new([2, 2, 2], 8).unwrap();
        assert_eq!(census(&g, BlockId(0)), [3, 3, 1]);

        let g = BlockGrid::new([1, 1, 1], 8).unwrap();
        assert!(g.neighbors(BlockId(0)).unwrap().is_empty());
        assert!(g.neighbors(BlockId(1)).is_err());
    }

    #[test]
    fn neighbors_symmetric_and_distinct() {
        let g = BlockGrid::new([4, 3, 3], 1).unwrap();
        for id in g.ids() {
            let ns = g.neighbors(id).unwrap();
            let mut ids: Vec<_> = ns.iter().map(|n| n.0).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), ns.len());
            for (n, class) in ns {
                assert_ne!(n, id);
                assert!(g.neighbors(n).unwrap().contains(&(id, class)));
            }
        }
    }

    #[test]
    fn neighbor_census_matches_formula() {
        for nx in 1..=5 {
            for ny in 1..=5 {
                for nz in 1..=5 {
                    let dims = [nx, ny, nz];
                    let g = BlockGrid::new(dims, 1).unwrap();
                    for id in g.ids() {
                        let c = g.coord_of(id).unwrap();
                        // extra in-range positions per axis besides the block's own
                        let a: Vec<usize> = (0..3)
                            .map(|ax| {
                                usize::from(c[ax] > 0) + usize::from(c[ax] + 1 < dims[ax])
                            })
                            .collect();
                        let face = a[0] + a[1] + a[2];
                        let edge = a[0] * a[1] + a[1] * a[2] + a[0] * a[2];
                        let corner = a[0] * a[1] * a[2];
                        assert_eq!(census(&g, id), [face, edge, corner], "{dims:?} {c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn validate_assignment_examples() {
        let g = BlockGrid::new([2, 2, 2], 4).unwrap();
        let all: Vec<_> = g.ids().map(|b| (b, 0)).collect();
        assert!(validate_assignment(&g, 1, &all).is_empty());

        let missing = &all[1..];
        let v = validate_assignment(&g, 1, missing);
        assert_eq!(v, vec![Violation::UnassignedBlock(BlockId(0))]);
        assert!(v[0].to_string().starts_with("unassigned block"));

        let mut bad = all.clone();
        bad[3].1 = 5;
        let v = validate_assignment(&g, 4, &bad);
        assert_eq!(
            v,
            vec![Violation::OwnerOutOfRange {
                block: BlockId(3),
                owner: 5
            }]
        );
        assert!(v[0].to_string().starts_with("owner out of range"));

        let mut dup = all.clone();
        dup.push((BlockId(2), 0));
        assert_eq!(
            validate_assignment(&g, 1, &dup),
            vec![Violation::DuplicateEntry(BlockId(2))]
        );
        assert!(Assignment::from_entries(&g, 1, &dup).is_err());
    }

    #[test]
    fn quantities_validation() {
        let q = BlockQuantities {
            cells: 8,
            fluid: 6,
            near_boundary: 7,
            ..Default::default()
        };
        assert!(q.validate().is_err());
    }
}

//! Morton and Hilbert indices on a `2ⁿ × 2ⁿ × 2ⁿ` lattice.

use super::CurveKind;
use crate::error::{Error, Result};
use crate::grid::{BlockGrid, BlockId};

/// Largest order whose indices fit into 63 bits.
pub const MAX_ORDER: u32 = 21;

fn check(coord: [u32; 3], order: u32) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::invalid(format!(
            "curve order {order} exceeds {MAX_ORDER}"
        )));
    }
    if coord.iter().any(|&c| (c as u64) >> order != 0) {
        return Err(Error::invalid(format!(
            "coordinate {coord:?} out of range for order {order}"
        )));
    }
    Ok(())
}

/// Spreads the low 21 bits of `v` so bit `i` lands at bit `3i`.
#[inline]
fn spread3(v: u32) -> u64 {
    let mut x = v as u64 & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

/// Z-order index with x in the least significant position of every bit
/// triple.
pub fn morton_index(coord: [u32; 3], order: u32) -> Result<u64> {
    check(coord, order)?;
    Ok(spread3(coord[0]) | spread3(coord[1]) << 1 | spread3(coord[2]) << 2)
}

/// Hilbert index via Skilling's transpose construction ("Programming the
/// Hilbert curve", 2004): coordinates are turned into the transposed index
/// in place, then the bits are interleaved with axis 0 most significant.
pub fn hilbert_index(coord: [u32; 3], order: u32) -> Result<u64> {
    check(coord, order)?;
    if order == 0 {
        return Ok(0);
    }
    let mut x = coord;
    let m = 1u32 << (order - 1);

    // inverse undo
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    // Gray encode
    for i in 1..3 {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    q = m;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in &mut x {
        *v ^= t;
    }

    let mut index = 0u64;
    for b in (0..order).rev() {
        for v in &x {
            index = index << 1 | ((v >> b) & 1) as u64;
        }
    }
    Ok(index)
}

/// Inverse of [`hilbert_index`].
pub fn hilbert_coords(index: u64, order: u32) -> Result<[u32; 3]> {
    if order > MAX_ORDER || (order < MAX_ORDER && index >> (3 * order) != 0) {
        return Err(Error::invalid(format!(
            "index {index} out of range for order {order}"
        )));
    }
    if order == 0 {
        return Ok([0; 3]);
    }
    let mut x = [0u32; 3];
    for b in 0..order {
        for (i, v) in x.iter_mut().enumerate() {
            let bit = (index >> (3 * b + 2 - i as u32)) & 1;
            *v |= (bit as u32) << b;
        }
    }

    let n = 2u32 << (order - 1);
    // Gray decode
    let t = x[2] >> 1;
    for i in (1..3).rev() {
        x[i] ^= x[i - 1];
    }
    x[0] ^= t;
    // undo excess work
    let mut q = 2u32;
    while q != n {
        let p = q - 1;
        for i in (0..3).rev() {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
    Ok(x)
}

/// Smallest `n` with `2ⁿ ≥ extent` for every axis.
pub fn enclosing_order(dims: [usize; 3]) -> u32 {
    let max = dims.iter().copied().max().unwrap_or(1).max(1);
    max.next_power_of_two().trailing_zeros()
}

/// Blocks of `grid` sorted by their curve index in the enclosing `2ⁿ` cube.
pub fn curve_order(grid: &BlockGrid, kind: CurveKind) -> Vec<BlockId> {
    let order = enclosing_order(grid.dims());
    let mut keyed: Vec<(u64, BlockId)> = grid
        .ids()
        .map(|id| {
            let c = grid.coord_unchecked(id).map(|v| v as u32);
            let key = match kind {
                CurveKind::Morton => morton_index(c, order),
                CurveKind::Hilbert => hilbert_index(c, order),
            }
            .expect("block coordinates lie inside the enclosing cube");
            (key, id)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, id)| id).collect()
}

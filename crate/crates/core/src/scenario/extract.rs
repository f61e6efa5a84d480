use super::bins::Bins;
use super::ParticleScene;
use crate::error::{Error, Result};
use crate::grid::{BlockGrid, BlockQuantities};

/// Relative slack on the diameter when deciding whether two spheres touch;
/// resting spheres sit at exactly one diameter apart.
pub const CONTACT_MARGIN: f64 = 1e-6;

/// Solid flags of every cell plus one ghost layer.
struct SolidMap {
    dims: [usize; 3],
    flags: Vec<bool>,
}

impl SolidMap {
    fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }
}

fn solid_map(scene: &ParticleScene, cells: [usize; 3]) -> SolidMap {
    let dims = cells.map(|n| n + 2);
    let mut map = SolidMap {
        dims,
        flags: vec![false; dims[0] * dims[1] * dims[2]],
    };
    // ghost index g covers the cell centred at g − 0.5
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let c = [x as f64 - 0.5, y as f64 - 0.5, z as f64 - 0.5];
                if scene.planes.iter().any(|p| p.signed_distance(c) > 0.0) {
                    let i = map.idx(x, y, z);
                    map.flags[i] = true;
                }
            }
        }
    }
    let r = 0.5 * scene.diameter;
    for s in &scene.spheres {
        let lo = s.center.map(|v| ((v - r + 0.5).floor().max(0.0)) as usize);
        let hi = [0, 1, 2].map(|a| ((s.center[a] + r + 0.5).ceil().max(0.0) as usize).min(dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let c = [x as f64 - 0.5, y as f64 - 0.5, z as f64 - 0.5];
                    let d2: f64 = (0..3).map(|a| (c[a] - s.center[a]).powi(2)).sum();
                    if d2 <= r * r {
                        let i = map.idx(x, y, z);
                        map.flags[i] = true;
                    }
                }
            }
        }
    }
    map
}

/// Marks every interior cell that has a solid cell among its 18 face and
/// edge neighbours: a full 3×3 square in its own xy-slice plus a plus shape
/// in the slices above and below. Built from separable dilations.
fn near_solid(map: &SolidMap) -> Vec<bool> {
    let [nx, ny, nz] = map.dims;
    let a = &map.flags;
    let len = a.len();
    let sx = 1;
    let sy = nx;
    let sz = nx * ny;
    // dilation along x, then y
    let mut dx = vec![false; len];
    let mut dy = vec![false; len];
    for z in 0..nz {
        for y in 0..ny {
            let row = z * sz + y * sy;
            for x in 1..nx - 1 {
                let i = row + x;
                dx[i] = a[i - sx] | a[i] | a[i + sx];
            }
        }
    }
    for z in 0..nz {
        for y in 1..ny - 1 {
            let row = z * sz + y * sy;
            for x in 0..nx {
                let i = row + x;
                dy[i] = a[i - sy] | a[i] | a[i + sy];
            }
        }
    }
    let mut square = vec![false; len];
    let mut plus = vec![false; len];
    for z in 0..nz {
        for y in 1..ny - 1 {
            let row = z * sz + y * sy;
            for x in 1..nx - 1 {
                let i = row + x;
                square[i] = dx[i - sy] | dx[i] | dx[i + sy];
                plus[i] = dx[i] | dy[i];
            }
        }
    }
    let mut near = vec![false; len];
    for z in 1..nz - 1 {
        for y in 1..ny - 1 {
            let row = z * sz + y * sy;
            for x in 1..nx - 1 {
                let i = row + x;
                near[i] = square[i] | plus[i - sz] | plus[i + sz];
            }
        }
    }
    near
}

fn block_of(grid: &BlockGrid, p: [f64; 3]) -> usize {
    let b = grid.block_size() as f64;
    let dims = grid.dims();
    let c = [0, 1, 2].map(|a| ((p[a] / b).floor().max(0.0) as usize).min(dims[a] - 1));
    c[0] + dims[0] * (c[1] + dims[1] * c[2])
}

/// Flags cells from the scene and counts per-block quantities.
///
/// A cell is solid if its centre lies inside a sphere or a plane's solid
/// half-space. Near-boundary cells are fluid cells with a solid cell among
/// their 18 face and edge neighbours, including cells just outside the
/// domain. A particle is local to the block holding its centre and a shadow
/// in every other block its bounding box overlaps. Contacts are touching
/// sphere pairs, counted once in the block holding the pair's midpoint.
pub fn extract_block_quantities(
    scene: &ParticleScene,
    grid: &BlockGrid,
    sub_cycles: u64,
) -> Result<Vec<BlockQuantities>> {
    let b = grid.block_size();
    let dims = grid.dims();
    let cells = dims.map(|d| d * b);
    let expected = grid.extents();
    if (0..3).any(|a| (expected[a] - scene.extents[a]).abs() > 1e-9) {
        return Err(Error::invalid(format!(
            "scene extents {:?} do not match the block grid {:?}",
            scene.extents, expected
        )));
    }
    if sub_cycles == 0 {
        return Err(Error::invalid("sub-cycle count must be >= 1"));
    }

    let cpb = grid.cells_per_block();
    let mut out = vec![
        BlockQuantities {
            cells: cpb,
            sub_cycles,
            ..Default::default()
        };
        grid.len()
    ];

    let map = solid_map(scene, cells);
    let near = near_solid(&map);
    for z in 1..=cells[2] {
        for y in 1..=cells[1] {
            let row = map.idx(0, y, z);
            let blk_row = dims[0] * (((y - 1) / b) + dims[1] * ((z - 1) / b));
            for x in 1..=cells[0] {
                if map.flags[row + x] {
                    continue;
                }
                let q = &mut out[blk_row + (x - 1) / b];
                q.fluid += 1;
                q.near_boundary += near[row + x] as u64;
            }
        }
    }

    let r = 0.5 * scene.diameter;
    let bf = b as f64;
    for s in &scene.spheres {
        let home = block_of(grid, s.center);
        out[home].local_particles += 1;
        // open AABB (c − r, c + r) against half-open blocks [kb, (k+1)b)
        let lo = s.center.map(|v| ((v - r) / bf).floor().max(0.0) as usize);
        let hi = [0, 1, 2].map(|a| {
            ((((s.center[a] + r) / bf).ceil() - 1.0).max(0.0) as usize).min(dims[a] - 1)
        });
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let blk = i + dims[0] * (j + dims[1] * k);
                    if blk != home {
                        out[blk].shadow_particles += 1;
                    }
                }
            }
        }
    }

    let touch = scene.diameter * (1.0 + CONTACT_MARGIN);
    let mut bins = Bins::new(scene.extents, touch);
    for (i, s) in scene.spheres.iter().enumerate() {
        bins.insert(i, s.center);
    }
    for (i, s) in scene.spheres.iter().enumerate() {
        bins.for_each_near(s.center, |j| {
            if j > i {
                let o = scene.spheres[j].center;
                let d2: f64 = (0..3).map(|a| (s.center[a] - o[a]).powi(2)).sum();
                if d2 < touch * touch {
                    let mid = [0, 1, 2].map(|a| 0.5 * (s.center[a] + o[a]));
                    out[block_of(grid, mid)].contacts += 1;
                }
            }
        });
    }

    debug_assert!(out.iter().all(|q| q.validate().is_ok()));
    Ok(out)
}

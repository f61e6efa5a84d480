//! Synthetic particle scenes that produce realistic, time-varying block
//! quantities.
//!
//! Spheres settle kinematically onto a floor (and, for the hopper, along
//! inclined walls); nothing here solves fluid or contact dynamics. The
//! quantities extracted from the scene feed the estimator exactly as
//! measured block quantities would.

mod bins;
mod extract;
mod scene;
mod synth;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{BlockGrid, BlockQuantities};

pub use extract::{extract_block_quantities, CONTACT_MARGIN};
pub use scene::{init_scene, step_scene, ParticleScene, Sphere, OVERLAP_TOL};
pub use synth::{synthesize_timings, unclamped};

/// Default settling speed in cells per time step.
pub const DEFAULT_SETTLING_SPEED: f64 = 0.04;

/// Densest solid fraction accepted for a configuration.
pub const MAX_SOLID_FRACTION: f64 = 0.64;

/// Static obstacle: the half-space `{x : (x − point)·normal > 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: [f64; 3],
    /// Unit normal pointing into the solid.
    pub normal: [f64; 3],
}

impl Plane {
    pub fn new(point: [f64; 3], normal: [f64; 3]) -> Result<Self> {
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::invalid(format!("degenerate plane normal {normal:?}")));
        }
        Ok(Plane {
            point,
            normal: normal.map(|v| v / len),
        })
    }

    /// Positive inside the solid.
    #[inline]
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        (p[0] - self.point[0]) * self.normal[0]
            + (p[1] - self.point[1]) * self.normal[1]
            + (p[2] - self.point[2]) * self.normal[2]
    }

    /// Whether a sphere resting on this plane stays put instead of sliding
    /// (slope of at most 60°).
    pub fn supports(&self) -> bool {
        self.normal[2] <= -0.5
    }
}

/// Where the initial particles are placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRegion {
    /// Anywhere in the fluid.
    Fluid,
    /// A slab of the given depth directly below the top of the fluid.
    TopSlab { depth: f64 },
}

/// Physical parameters of the modelled experiment. Recorded only; they do
/// not drive the kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalMetadata {
    pub galileo: f64,
    pub density_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: String,
    pub dims: [usize; 3],
    /// Cells per block edge.
    pub block_size: usize,
    /// Sphere diameter in cells.
    pub diameter: f64,
    /// Target solid volume fraction of the fluid domain.
    pub solid_fraction: f64,
    pub particle_count: usize,
    /// Descent per time step of an isolated sphere, in cells.
    pub settling_speed: f64,
    pub sub_cycles: u64,
    /// Distance the top wall reaches down from the top of the block grid.
    pub top_offset: f64,
    pub planes: Vec<Plane>,
    pub initial_region: InitialRegion,
    /// Time steps.
    pub duration: u64,
    pub seed: u64,
    pub metadata: PhysicalMetadata,
}

fn sphere_volume(d: f64) -> f64 {
    PI / 6.0 * d * d * d
}

fn scaled_dims(base: [usize; 3], scale: f64) -> Result<[usize; 3]> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::invalid(format!("preset scale must be in (0, 1], got {scale}")));
    }
    Ok(base.map(|d| ((d as f64 * scale).ceil() as usize).max(1)))
}

impl ScenarioConfig {
    /// Particles settling from a random initial distribution in a box whose
    /// top wall reaches 1.05 block heights into the block grid, so the top
    /// block layer is entirely solid.
    pub fn settling_box(scale: f64, block_size: usize, diameter: f64) -> Result<Self> {
        let dims = scaled_dims([4, 4, 5], scale)?;
        let b = block_size as f64;
        let top_offset = 1.05 * b;
        let extents = dims.map(|d| d as f64 * b);
        let height = extents[2] - top_offset;
        let solid_fraction = 0.2;
        let fluid_volume = extents[0] * extents[1] * height;
        let particle_count = (solid_fraction * fluid_volume / sphere_volume(diameter)).round() as usize;
        let settling_speed = DEFAULT_SETTLING_SPEED;
        let cfg = ScenarioConfig {
            preset: "settling-box".into(),
            dims,
            block_size,
            diameter,
            solid_fraction,
            particle_count,
            settling_speed,
            sub_cycles: 10,
            top_offset,
            planes: vec![
                Plane::new([0.0; 3], [0.0, 0.0, -1.0])?,
                Plane::new([0.0, 0.0, height], [0.0, 0.0, 1.0])?,
            ],
            initial_region: InitialRegion::Fluid,
            // 2.5 characteristic times of falling through the fluid height
            duration: (2.5 * height / settling_speed).ceil() as u64,
            seed: 0,
            metadata: PhysicalMetadata {
                galileo: 30.0,
                density_ratio: 2.5,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A hopper: four inclined walls shrink the horizontal cross-section to
    /// 40% at the floor. Particles start densely packed below the top plane.
    pub fn hopper(scale: f64, block_size: usize, diameter: f64) -> Result<Self> {
        let dims = scaled_dims([12, 12, 16], scale)?;
        let b = block_size as f64;
        let [lx, ly, lz] = dims.map(|d| d as f64 * b);
        // side-length ratio bottom/top for a 60% area reduction
        let ratio = 0.4f64.sqrt();
        let inset_x = 0.5 * lx * (1.0 - ratio);
        let inset_y = 0.5 * ly * (1.0 - ratio);
        let n_blocks = (dims[0] * dims[1] * dims[2]) as f64;
        let particle_count = (4300.0 * n_blocks / 2304.0).round() as usize;
        let fluid_volume = lx * ly * lz * (1.0 + ratio + ratio * ratio) / 3.0;
        let solid_fraction = particle_count as f64 * sphere_volume(diameter) / fluid_volume;
        let slab_fraction = 0.25;
        let depth = (particle_count as f64 * sphere_volume(diameter) / (slab_fraction * lx * ly))
            .max(diameter)
            .min(lz);
        let planes = vec![
            Plane::new([0.0; 3], [0.0, 0.0, -1.0])?,
            Plane::new([0.0, 0.0, lz], [0.0, 0.0, 1.0])?,
            // solid where x < inset·(1 − z/lz), and mirrored
            Plane::new([inset_x, 0.0, 0.0], [-1.0, 0.0, -inset_x / lz])?,
            Plane::new([lx - inset_x, 0.0, 0.0], [1.0, 0.0, -inset_x / lz])?,
            Plane::new([0.0, inset_y, 0.0], [0.0, -1.0, -inset_y / lz])?,
            Plane::new([0.0, ly - inset_y, 0.0], [0.0, 1.0, -inset_y / lz])?,
        ];
        let cfg = ScenarioConfig {
            preset: "hopper".into(),
            dims,
            block_size,
            diameter,
            solid_fraction,
            particle_count,
            settling_speed: DEFAULT_SETTLING_SPEED,
            sub_cycles: 10,
            top_offset: 0.0,
            planes,
            initial_region: InitialRegion::TopSlab { depth },
            duration: (80_000.0 * scale).ceil() as u64,
            seed: 0,
            metadata: PhysicalMetadata {
                galileo: 50.0,
                density_ratio: 1.5,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        BlockGrid::new(self.dims, self.block_size)?;
        if !(self.diameter >= 2.0) {
            return Err(Error::invalid(format!(
                "particle diameter must be >= 2 cells, got {}",
                self.diameter
            )));
        }
        if !(self.solid_fraction > 0.0 && self.solid_fraction <= MAX_SOLID_FRACTION) {
            return Err(Error::invalid(format!(
                "solid fraction must be in (0, {MAX_SOLID_FRACTION}], got {}",
                self.solid_fraction
            )));
        }
        // neighbour binning assumes a sphere moves much less than its
        // diameter per step
        if !(self.settling_speed > 0.0 && self.settling_speed <= 0.1 * self.diameter) {
            return Err(Error::invalid(format!(
                "settling speed must be in (0, 0.1·D], got {}",
                self.settling_speed
            )));
        }
        if self.sub_cycles == 0 {
            return Err(Error::invalid("sub-cycle count must be >= 1"));
        }
        if !(self.top_offset >= 0.0) {
            return Err(Error::invalid("top wall offset must be >= 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> BlockGrid {
        BlockGrid::new(self.dims, self.block_size).expect("validated dimensions")
    }

    pub fn extents(&self) -> [f64; 3] {
        self.dims.map(|d| (d * self.block_size) as f64)
    }

    /// Height of the fluid region below the top wall.
    pub fn fluid_height(&self) -> f64 {
        self.extents()[2] - self.top_offset
    }
}

/// Builds a named preset at the given scale with its default block size and
/// particle diameter.
pub fn make_preset(name: &str, scale: f64) -> Result<ScenarioConfig> {
    build_preset(name, scale, None, None)
}

/// Like [`make_preset`], optionally overriding block size and diameter.
pub fn build_preset(
    name: &str,
    scale: f64,
    block_size: Option<usize>,
    diameter: Option<f64>,
) -> Result<ScenarioConfig> {
    match name {
        "settling-box" => ScenarioConfig::settling_box(scale, block_size.unwrap_or(32), diameter.unwrap_or(10.0)),
        "hopper" => ScenarioConfig::hopper(scale, block_size.unwrap_or(32), diameter.unwrap_or(15.0)),
        _ => Err(Error::invalid(format!(
            "unknown preset '{name}' (expected settling-box or hopper)"
        ))),
    }
}

/// Block quantities of every block at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantitySnapshot {
    pub step: u64,
    /// Indexed by block id.
    pub quantities: Vec<BlockQuantities>,
}

/// Runs the scenario for its full duration and extracts quantities at step
/// 0 and every `every` steps thereafter.
pub fn quantity_trace(config: &ScenarioConfig, every: u64) -> Result<Vec<QuantitySnapshot>> {
    if every == 0 {
        return Err(Error::invalid("snapshot interval must be >= 1"));
    }
    let grid = config.grid();
    let mut scene = init_scene(config)?;
    let mut out = Vec::new();
    let mut step = 0;
    loop {
        out.push(QuantitySnapshot {
            step,
            quantities: extract_block_quantities(&scene, &grid, config.sub_cycles)?,
        });
        if step + every > config.duration {
            break;
        }
        scene.advance(every);
        step += every;
    }
    Ok(out)
}

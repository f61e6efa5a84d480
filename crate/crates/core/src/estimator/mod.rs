//! Per-block workload prediction.
//!
//! A block's per-time-step cost is split into five parts (two lattice
//! Boltzmann kernels, boundary handling, particle mapping, PDF
//! reconstruction and the rigid-body solver). Each part is a function that
//! is linear in its coefficients, so calibration against timing samples is
//! an ordinary least-squares problem per part.

mod fit;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BlockId, BlockQuantities};

pub use fit::{fit_coefficients, least_squares_min_norm};
pub use stats::{fraction_within, relative_errors, summary_stats, RelativeErrors};

/// The five timed parts of one coupled time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Lbm,
    Bh,
    Coup1,
    Coup2,
    Rb,
}

impl Part {
    pub const ALL: [Part; 5] = [Part::Lbm, Part::Bh, Part::Coup1, Part::Coup2, Part::Rb];

    pub fn name(self) -> &'static str {
        match self {
            Part::Lbm => "lbm",
            Part::Bh => "bh",
            Part::Coup1 => "coup1",
            Part::Coup2 => "coup2",
            Part::Rb => "rb",
        }
    }

    pub fn n_coefficients(self) -> usize {
        match self {
            Part::Lbm | Part::Bh => 3,
            Part::Coup1 | Part::Coup2 | Part::Rb => 5,
        }
    }

    /// Regression features whose dot product with the part's coefficients
    /// gives the part's prediction.
    pub fn features(self, q: &BlockQuantities) -> Vec<f64> {
        let c = q.cells as f64;
        let f = q.fluid as f64;
        let b = q.near_boundary as f64;
        let pl = q.local_particles as f64;
        let ps = q.shadow_particles as f64;
        let k = q.contacts as f64;
        let s = q.sub_cycles as f64;
        match self {
            Part::Lbm => vec![c, f, 1.0],
            Part::Bh => vec![c, b, 1.0],
            Part::Coup1 | Part::Coup2 => vec![c, f, pl, ps, 1.0],
            // the rigid-body intercept is per sub-cycle
            Part::Rb => vec![s * (pl + ps) * (pl + ps), s * pl, s * ps, s * k, s],
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Coefficients of the five workload functions, in ms per unit feature.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorCoefficients {
    pub lbm: [f64; 3],
    pub bh: [f64; 3],
    pub coup1: [f64; 5],
    pub coup2: [f64; 5],
    pub rb: [f64; 5],
}

impl EstimatorCoefficients {
    /// Coefficients measured on one cluster node for the spherical-particle
    /// coupling. They are hardware specific: a sensible default profile, not
    /// ground truth for new machines.
    pub fn reference_profile() -> Self {
        EstimatorCoefficients {
            lbm: [9.99e-06, 1.57e-04, -8.23e-02],
            bh: [6.65e-06, 7.06e-04, -1.09e-01],
            coup1: [3.08e-06, 2.42e-07, 1.41e-02, 2.78e-02, -1.40e-01],
            coup2: [5.99e-06, 3.90e-06, -8.80e-03, 2.51e-02, -1.30e-01],
            rb: [1.16e-06, 9.62e-04, 2.75e-04, 1.48e-03, 1.88e-02],
        }
    }

    pub fn part(&self, part: Part) -> &[f64] {
        match part {
            Part::Lbm => &self.lbm,
            Part::Bh => &self.bh,
            Part::Coup1 => &self.coup1,
            Part::Coup2 => &self.coup2,
            Part::Rb => &self.rb,
        }
    }

    pub fn part_mut(&mut self, part: Part) -> &mut [f64] {
        match part {
            Part::Lbm => &mut self.lbm,
            Part::Bh => &mut self.bh,
            Part::Coup1 => &mut self.coup1,
            Part::Coup2 => &mut self.coup2,
            Part::Rb => &mut self.rb,
        }
    }

    pub fn is_finite(&self) -> bool {
        Part::ALL
            .iter()
            .all(|&p| self.part(p).iter().all(|v| v.is_finite()))
    }

    /// Element-wise sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for p in Part::ALL {
            for (a, b) in out.part_mut(p).iter_mut().zip(other.part(p)) {
                *a += b;
            }
        }
        out
    }
}

pub fn wl_lbm(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    let [a1, a2, a3] = c.lbm;
    a1 * q.cells as f64 + a2 * q.fluid as f64 + a3
}

pub fn wl_bh(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    let [a1, a2, a3] = c.bh;
    a1 * q.cells as f64 + a2 * q.near_boundary as f64 + a3
}

fn coupling(q: &BlockQuantities, a: &[f64; 5]) -> f64 {
    a[0] * q.cells as f64
        + a[1] * q.fluid as f64
        + a[2] * q.local_particles as f64
        + a[3] * q.shadow_particles as f64
        + a[4]
}

pub fn wl_coup1(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    coupling(q, &c.coup1)
}

pub fn wl_coup2(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    coupling(q, &c.coup2)
}

pub fn wl_rb(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    let [a1, a2, a3, a4, a5] = c.rb;
    let pl = q.local_particles as f64;
    let ps = q.shadow_particles as f64;
    q.sub_cycles as f64
        * (a1 * (pl + ps) * (pl + ps) + a2 * pl + a3 * ps + a4 * q.contacts as f64 + a5)
}

pub fn wl_part(part: Part, q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    match part {
        Part::Lbm => wl_lbm(q, c),
        Part::Bh => wl_bh(q, c),
        Part::Coup1 => wl_coup1(q, c),
        Part::Coup2 => wl_coup2(q, c),
        Part::Rb => wl_rb(q, c),
    }
}

pub fn wl_total(q: &BlockQuantities, c: &EstimatorCoefficients) -> f64 {
    wl_lbm(q, c) + wl_bh(q, c) + wl_coup1(q, c) + wl_coup2(q, c) + wl_rb(q, c)
}

/// Floor applied to predictions used as partitioning weights.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-6;

/// `wl_total` clamped to `floor` for use as a block weight.
pub fn block_weight(q: &BlockQuantities, c: &EstimatorCoefficients, floor: f64) -> f64 {
    wl_total(q, c).max(floor)
}

/// Measured part times of one block at one step, in ms.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSample {
    pub block_id: BlockId,
    pub step: u64,
    pub quantities: BlockQuantities,
    timings: [f64; 5],
}

impl TimingSample {
    pub fn new(
        block_id: BlockId,
        step: u64,
        quantities: BlockQuantities,
        timings: [f64; 5],
    ) -> Result<Self> {
        if let Some(v) = timings.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "timing values must be finite and non-negative, got {v}"
            )));
        }
        Ok(TimingSample {
            block_id,
            step,
            quantities,
            timings,
        })
    }

    pub fn timing(&self, part: Part) -> f64 {
        self.timings[part.index()]
    }

    pub fn timings(&self) -> [f64; 5] {
        self.timings
    }

    /// Sum of the five part timings.
    pub fn m_tot(&self) -> f64 {
        self.timings.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(c: u64, f: u64, b: u64, pl: u64, ps: u64, k: u64, s: u64) -> BlockQuantities {
        BlockQuantities {
            cells: c,
            fluid: f,
            near_boundary: b,
            local_particles: pl,
            shadow_particles: ps,
            contacts: k,
            sub_cycles: s,
        }
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    // Expected values below are the hand evaluations of each function with
    // the reference coefficients, written out term by term.

    #[test]
    fn lbm_examples() {
        let t = EstimatorCoefficients::reference_profile();
        let full = 9.99e-6 * 32768.0 + 1.57e-4 * 32768.0 - 8.23e-2;
        close(full, 5.38963, 1e-5);
        close(wl_lbm(&q(32768, 32768, 0, 0, 0, 0, 1), &t), full, 1e-12);
        close(wl_lbm(&q(32768, 0, 0, 0, 0, 0, 1), &t), 0.24505, 1e-5);
        let zero = EstimatorCoefficients::default();
        assert_eq!(wl_lbm(&q(32768, 100, 0, 0, 0, 0, 1), &zero), 0.0);
    }

    #[test]
    fn bh_examples() {
        let t = EstimatorCoefficients::reference_profile();
        close(wl_bh(&q(32768, 32768, 0, 0, 0, 0, 1), &t), 0.1089, 1e-4);
        close(wl_bh(&q(32768, 32768, 1000, 0, 0, 0, 1), &t), 0.8149, 1e-4);
        assert_eq!(
            wl_bh(&q(5, 5, 5, 0, 0, 0, 1), &EstimatorCoefficients::default()),
            0.0
        );
    }

    #[test]
    fn coupling_examples() {
        let t = EstimatorCoefficients::reference_profile();
        let x = q(32768, 30000, 0, 5, 2, 0, 1);
        // 0.100925 + 0.00726 + 0.0705 + 0.0556 - 0.14
        close(wl_coup1(&x, &t), 0.094285, 1e-6);
        // 0.196280 + 0.117 - 0.044 + 0.0502 - 0.13
        close(wl_coup2(&x, &t), 0.189480, 1e-5);
        let zero = EstimatorCoefficients::default();
        assert_eq!(wl_coup1(&x, &zero), 0.0);
        assert_eq!(wl_coup2(&x, &zero), 0.0);
    }

    #[test]
    fn rb_examples() {
        let t = EstimatorCoefficients::reference_profile();
        close(wl_rb(&q(32768, 0, 0, 0, 0, 0, 10), &t), 0.188, 1e-12);
        // 10 * (4.176e-5 + 3.848e-3 + 5.5e-4 + 4.44e-3 + 1.88e-2)
        close(wl_rb(&q(32768, 0, 0, 4, 2, 3, 10), &t), 0.2767976, 1e-9);
        assert_eq!(wl_rb(&q(32768, 0, 0, 4, 2, 3, 0), &t), 0.0);
    }

    #[test]
    fn total_examples() {
        let t = EstimatorCoefficients::reference_profile();
        let empty = q(32768, 0, 0, 0, 0, 0, 10);
        // 0.24505 + 0.10891 - 0.039075 + 0.06628 + 0.188
        close(wl_total(&empty, &t), 0.569165, 1e-5);
        let x = q(32768, 20000, 900, 7, 3, 4, 10);
        let sum: f64 = Part::ALL.iter().map(|&p| wl_part(p, &x, &t)).sum();
        assert_eq!(wl_total(&x, &t), sum);
        assert_eq!(wl_total(&x, &EstimatorCoefficients::default()), 0.0);
    }

    #[test]
    fn features_agree_with_functions() {
        let t = EstimatorCoefficients::reference_profile();
        let x = q(13824, 9000, 700, 6, 4, 5, 10);
        for p in Part::ALL {
            let dot: f64 = p.features(&x).iter().zip(t.part(p)).map(|(a, b)| a * b).sum();
            close(dot, wl_part(p, &x, &t), 1e-12);
            assert_eq!(p.features(&x).len(), p.n_coefficients());
        }
    }

    #[test]
    fn block_weight_floor() {
        let mut c = EstimatorCoefficients::default();
        c.lbm[2] = -5.0;
        let x = q(8, 8, 0, 0, 0, 0, 1);
        assert_eq!(block_weight(&x, &c, DEFAULT_WEIGHT_FLOOR), 1e-6);
    }

    #[test]
    fn sample_rejects_bad_timings() {
        let x = q(8, 8, 0, 0, 0, 0, 1);
        assert!(TimingSample::new(BlockId(0), 0, x, [1.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(TimingSample::new(BlockId(0), 0, x, [1.0, -1.0, 0.0, 0.0, 0.0]).is_err());
        let s = TimingSample::new(BlockId(0), 0, x, [1.0, 2.0, 0.5, 0.25, 0.25]).unwrap();
        assert_eq!(s.m_tot(), 4.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn quantities() -> impl Strategy<Value = BlockQuantities> {
            (1u64..70000, 0u64..=100, 0u64..=100, 0u64..50, 0u64..50, 0u64..80, 0u64..20).prop_map(
                |(c, fp, bp, pl, ps, k, s)| {
                    let f = c * fp / 100;
                    q(c, f, f * bp / 100, pl, ps, k, s)
                },
            )
        }

        fn coefficients() -> impl Strategy<Value = EstimatorCoefficients> {
            proptest::collection::vec(-1.0f64..1.0, 21).prop_map(|v| EstimatorCoefficients {
                lbm: [v[0], v[1], v[2]],
                bh: [v[3], v[4], v[5]],
                coup1: [v[6], v[7], v[8], v[9], v[10]],
                coup2: [v[11], v[12], v[13], v[14], v[15]],
                rb: [v[16], v[17], v[18], v[19], v[20]],
            })
        }

        proptest! {
            #[test]
            fn linear_in_coefficients(x in quantities(), c1 in coefficients(), c2 in coefficients()) {
                let sum = c1.add(&c2);
                for p in Part::ALL {
                    let lhs = wl_part(p, &x, &sum);
                    let rhs = wl_part(p, &x, &c1) + wl_part(p, &x, &c2);
                    let scale = 1.0 + lhs.abs().max(rhs.abs());
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * 1e4);
                }
            }

            #[test]
            fn total_is_sum_of_parts(x in quantities(), c in coefficients()) {
                let parts = [wl_lbm(&x, &c), wl_bh(&x, &c), wl_coup1(&x, &c), wl_coup2(&x, &c), wl_rb(&x, &c)];
                let sum = parts[0] + parts[1] + parts[2] + parts[3] + parts[4];
                prop_assert_eq!(wl_total(&x, &c), sum);
            }
        }
    }
}

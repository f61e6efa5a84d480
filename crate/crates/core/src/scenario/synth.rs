use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::QuantitySnapshot;
use crate::error::{Error, Result};
use crate::estimator::{wl_part, EstimatorCoefficients, Part, TimingSample};
use crate::grid::{BlockId, BlockQuantities};

/// Generates timing samples from known coefficients with multiplicative
/// Gaussian noise: `m_X = max(0, wl_X · (1 + ε))`, `ε ~ N(0, sigma²)`.
///
/// Noise is drawn per block in snapshot order and per part in
/// [`Part::ALL`] order, so a seed reproduces the samples exactly.
pub fn synthesize_timings(
    trace: &[QuantitySnapshot],
    truth: &EstimatorCoefficients,
    sigma: f64,
    seed: u64,
) -> Result<Vec<TimingSample>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if !truth.is_finite() {
        return Err(Error::invalid("coefficients must be finite"));
    }
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trace.iter().map(|s| s.quantities.len()).sum());
    for snap in trace {
        for (i, q) in snap.quantities.iter().enumerate() {
            let timings = Part::ALL.map(|p| {
                let eps = noise.sample(&mut rng);
                (wl_part(p, q, truth) * (1.0 + eps)).max(0.0)
            });
            out.push(TimingSample::new(BlockId(i), snap.step, *q, timings)?);
        }
    }
    Ok(out)
}

/// Whether every part prediction for `q` is non-negative, i.e. noiseless
/// synthesis leaves it unclamped.
pub fn unclamped(q: &BlockQuantities, truth: &EstimatorCoefficients) -> bool {
    Part::ALL.iter().all(|&p| wl_part(p, q, truth) >= 0.0)
}

use super::{wl_part, wl_total, EstimatorCoefficients, Part, TimingSample};
use crate::error::{Error, Result};

/// Prediction errors relative to each sample's total measured runtime.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelativeErrors {
    /// Indexed like [`Part::ALL`].
    pub per_part: [Vec<f64>; 5],
    pub total: Vec<f64>,
}

impl RelativeErrors {
    pub fn part(&self, part: Part) -> &[f64] {
        &self.per_part[part as usize]
    }
}

/// `E_X = (WL_X − m_X) / m_tot` for every part and sample, plus the same for
/// the total. The denominator is always the total runtime so that small
/// parts do not dominate the error picture.
pub fn relative_errors(
    samples: &[TimingSample],
    c: &EstimatorCoefficients,
) -> Result<RelativeErrors> {
    let mut out = RelativeErrors::default();
    for s in samples {
        let m_tot = s.m_tot();
        if m_tot <= 0.0 {
            return Err(Error::invalid(format!(
                "zero total runtime for block {} at step {}",
                s.block_id, s.step
            )));
        }
        for p in Part::ALL {
            out.per_part[p as usize].push((wl_part(p, &s.quantities, c) - s.timing(p)) / m_tot);
        }
        out.total.push((wl_total(&s.quantities, c) - m_tot) / m_tot);
    }
    Ok(out)
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median and median absolute deviation.
pub fn summary_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("summary statistics of an empty list"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("summary statistics of a list containing NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let median = median_of(&v);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    Ok((median, median_of(&dev)))
}

/// Fraction of `values` with magnitude strictly below `bound`.
pub fn fraction_within(values: &[f64], bound: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| v.abs() < bound).count() as f64 / values.len() as f64
}

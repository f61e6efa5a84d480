use nalgebra::{DMatrix, DVector};

use super::{EstimatorCoefficients, Part, TimingSample};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Fits the five workload functions independently by ordinary least squares.
///
/// Rank-deficient designs (e.g. a single block size, where the cell count is
/// collinear with the intercept) yield the minimal-norm solution.
pub fn fit_coefficients(samples: &[TimingSample]) -> Result<EstimatorCoefficients> {
    for s in samples {
        if let Some(v) = s.timings().iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite timing {v} for block {} at step {}",
                s.block_id, s.step
            )));
        }
    }
    let mut out = EstimatorCoefficients::default();
    for part in Part::ALL {
        let n = part.n_coefficients();
        if samples.len() < n {
            return Err(Error::invalid(format!(
                "part {} needs at least {n} samples, got {}",
                part.name(),
                samples.len()
            )));
        }
        let mut design = DMatrix::zeros(samples.len(), n);
        for (r, s) in samples.iter().enumerate() {
            for (c, v) in part.features(&s.quantities).into_iter().enumerate() {
                design[(r, c)] = v;
            }
        }
        let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.timing(part)));
        let x = least_squares_min_norm(&design, &rhs);
        out.part_mut(part).copy_from_slice(x.as_slice());
    }
    debug_assert!(out.is_finite());
    Ok(out)
}

/// Minimal-norm least-squares solution of `design · x ≈ rhs`.
///
/// Columns are scaled to unit max-magnitude before the SVD; the null space
/// found in scaled coordinates is mapped back so the returned `x` has
/// minimal Euclidean norm in the caller's (unscaled) units.
pub fn least_squares_min_norm(design: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = design.ncols();
    let scales: Vec<f64> = (0..n)
        .map(|c| {
            let m = design.column(c).amax();
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = design.clone();
    for (c, s) in scales.iter().enumerate() {
        scaled.column_mut(c).scale_mut(1.0 / s);
    }

    let svd = scaled.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let cutoff = sigma_max * RANK_TOLERANCE;

    let mut y = DVector::zeros(n);
    let mut null_basis = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        let v_i = v_t.row(i).transpose();
        if s > cutoff && s > 0.0 {
            let coef = u.column(i).dot(rhs) / s;
            y += v_i * coef;
        } else {
            null_basis.push(v_i);
        }
    }
    // thin SVD of a wide matrix drops trailing right-singular vectors
    if sigma.len() < n {
        let full = (scaled.transpose() * &scaled).svd(false, true);
        let vt = full.v_t.expect("v_t requested");
        for (i, &s) in full.singular_values.iter().enumerate() {
            if s <= sigma_max * sigma_max * RANK_TOLERANCE {
                null_basis.push(vt.row(i).transpose());
            }
        }
    }

    let mut x = DVector::from_iterator(n, y.iter().zip(&scales).map(|(v, s)| v / s));
    if !null_basis.is_empty() {
        // null(design) = S⁻¹ · null(scaled); strip x's component in it
        let cols: Vec<DVector<f64>> = null_basis
            .into_iter()
            .map(|v| DVector::from_iterator(n, v.iter().zip(&scales).map(|(a, s)| a / s)))
            .collect();
        let basis = DMatrix::from_columns(&cols);
        let q = basis.qr().q();
        let proj = &q * (q.transpose() * &x);
        x -= proj;
    }
    x
}

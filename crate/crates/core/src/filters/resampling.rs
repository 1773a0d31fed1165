use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SUM_RTOL: f64 = 1e-9;

/// Stratified selection: particle `i` is chosen for slot `ℓ` when
/// `R_ℓ = ℓ + r_ℓ` (zero-based) falls in the right-closed accumulated-weight
/// interval `(w_ac[i−1], w_ac[i]]`. Weights must sum to `L`.
pub fn selection_indices(weights: &DVector<f64>, draws: &[f64]) -> Result<Vec<usize>> {
    let l = weights.len();
    if draws.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: draws.len(),
        });
    }
    if let Some(i) = weights.iter().position(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::NonPositiveInput(i));
    }
    let total = weights.sum();
    if (total - l as f64).abs() > SUM_RTOL * l as f64 {
        return Err(Error::WeightSumMismatch {
            sum: total,
            expected: l as f64,
        });
    }
    let last_positive = weights
        .iter()
        .rposition(|&w| w > 0.0)
        .ok_or(Error::WeightSumMismatch {
            sum: total,
            expected: l as f64,
        })?;

    let mut selected = Vec::with_capacity(l);
    let mut i = 0;
    let mut upper = weights[0];
    for (slot, &r) in draws.iter().enumerate() {
        let pos = slot as f64 + r;
        // positions are non-decreasing, so the interval walk never moves back
        while i < last_positive && (pos > upper || weights[i] == 0.0) {
            i += 1;
            upper += weights[i];
        }
        selected.push(i);
    }
    Ok(selected)
}

/// `L × L` 0/1 matrix whose column `ℓ` is `e_i` for the particle selected in slot `ℓ`.
pub fn resampling_matrix(weights: &DVector<f64>, draws: &[f64]) -> Result<DMatrix<f64>> {
    let idx = selection_indices(weights, draws)?;
    let l = weights.len();
    let mut w = DMatrix::zeros(l, l);
    for (col, &row) in idx.iter().enumerate() {
        w[(row, col)] = 1.0;
    }
    Ok(w)
}

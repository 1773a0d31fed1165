//! Ensemble-space distances, shift statistics, spread and forecast scores.

mod decay;
mod histogram;
mod records;

use nalgebra::{DMatrix, DVector};

use crate::ens_space::{a_norm, EnsembleSpaceQuantities};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

pub use decay::{
    chi_mean_scale, fit_decay_exponent, simulate_norm_histogram, DecayModel, NormSimulation,
};
pub use histogram::{freedman_diaconis_width, median, quantile, Histogram};
pub use records::{
    read_cycle_rows, write_cycle_csv, write_point_csv, CycleDiagnostics, CycleRow, PointRecord,
    PointRow,
};

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn neumaier_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    neumaier_sum(values.iter().copied()) / values.len() as f64
}

/// Distance of the projected observation to the ensemble mean, `||C||_A`.
pub fn d_c(q: &EnsembleSpaceQuantities) -> f64 {
    a_norm(&q.c, q)
}

/// Distance of the projected observation to the nearest member, `min_j ||C − e_j||_A`.
pub fn d_min(q: &EnsembleSpaceQuantities) -> f64 {
    let ac = &q.a * &q.c;
    let cac = q.c.dot(&ac);
    (0..q.size())
        .map(|j| (cac - 2.0 * ac[j] + q.a[(j, j)]).max(0.0).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Mean-shift norms of a set of analysis points with their histogram and median.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftStats {
    pub norms: Vec<f64>,
    pub histogram: Histogram,
    pub median: f64,
}

/// A-norm of the mean of the shift columns, `||(1/L) W_shift 𝟙||_A`.
pub fn mean_shift_norm(w_shift: &DMatrix<f64>, q: &EnsembleSpaceQuantities) -> f64 {
    let l = w_shift.ncols();
    let mean = w_shift * DVector::from_element(l, 1.0 / l as f64);
    a_norm(&mean, q)
}

pub fn shift_stats(norms: Vec<f64>, bin_width: Option<f64>) -> ShiftStats {
    let histogram = Histogram::build(&norms, bin_width);
    let median = median(&norms);
    ShiftStats {
        norms,
        histogram,
        median,
    }
}

/// One-dimensional shift fraction `s(κ) = κb / (r + κb)`.
pub fn one_dim_shift_factor(kappa: f64, b: f64, r: f64) -> f64 {
    kappa * b / (r + kappa * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpreadStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-variable standard deviations (divisor `L − 1`).
pub fn spread_per_variable(ens: &Ensemble) -> DVector<f64> {
    let x = ens.perturbations();
    let l = ens.size() as f64;
    DVector::from_fn(ens.dim(), |i, _| {
        (x.row(i).norm_squared() / (l - 1.0)).sqrt()
    })
}

pub fn spread_stats(ens: &Ensemble) -> SpreadStats {
    let s = spread_per_variable(ens);
    SpreadStats {
        mean: neumaier_mean(s.as_slice()),
        min: s.min(),
        max: s.max(),
    }
}

/// `(sqrt(mean((v − ref)²)), mean(v − ref))`.
pub fn rmse_and_bias(values: &DVector<f64>, reference: &DVector<f64>) -> Result<(f64, f64)> {
    if values.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let diff = values - reference;
    let bias = neumaier_sum(diff.iter().copied()) / n;
    let mse = neumaier_sum(diff.iter().map(|d| d * d)) / n;
    Ok((mse.sqrt(), bias))
}

/// Empirical ensemble CRPS, `(1/L)Σ|x_i − y| − (1/(2L²))ΣΣ|x_i − x_j|`.
pub fn crps(members: &[f64], obs: f64) -> f64 {
    let l = members.len() as f64;
    let skill = neumaier_sum(members.iter().map(|x| (x - obs).abs())) / l;
    let mut sorted = members.to_vec();
    sorted.sort_by(f64::total_cmp);
    // ΣΣ|x_i − x_j| = 2 Σ_i (2i − L + 1) x_(i) for sorted values
    let n = sorted.len();
    let pair = 2.0
        * neumaier_sum(
            sorted
                .iter()
                .enumerate()
                .map(|(i, x)| (2.0 * i as f64 - n as f64 + 1.0) * x),
        );
    (skill - pair / (2.0 * l * l)).max(0.0)
}

/// CRPS averaged over state variables.
pub fn crps_field(ens: &Ensemble, truth: &DVector<f64>) -> Result<f64> {
    if truth.len() != ens.dim() {
        return Err(Error::DimensionMismatch {
            expected: ens.dim(),
            got: truth.len(),
        });
    }
    let m = ens.members();
    let per_var: Vec<f64> = (0..ens.dim())
        .map(|i| {
            let row: Vec<f64> = m.row(i).iter().copied().collect();
            crps(&row, truth[i])
        })
        .collect();
    Ok(neumaier_mean(&per_var))
}

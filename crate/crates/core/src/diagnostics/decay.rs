use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::histogram::Histogram;
use super::neumaier_mean;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Power-law spectrum `σ_j = η / j^ν`, `j = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub eta: f64,
    pub nu: f64,
}

impl DecayModel {
    pub fn sigmas(&self, l: usize) -> Vec<f64> {
        (1..=l)
            .map(|j| self.eta / (j as f64).powf(self.nu))
            .collect()
    }
}

/// `η = σ_1`, `ν` = mean over `j ≥ 2` of `(log η − log σ_j) / log j`.
pub fn fit_decay_exponent(sigmas: &[f64]) -> Result<DecayModel> {
    if sigmas.is_empty() {
        return Err(Error::NonPositiveInput(0));
    }
    if let Some(i) = sigmas.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::NonPositiveInput(i));
    }
    let eta = sigmas[0];
    if sigmas.len() == 1 {
        return Ok(DecayModel { eta, nu: 0.0 });
    }
    let ln_eta = eta.ln();
    let per_index: Vec<f64> = sigmas
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, s)| (ln_eta - s.ln()) / ((k + 1) as f64).ln())
        .collect();
    Ok(DecayModel {
        eta,
        nu: neumaier_mean(&per_index),
    })
}

/// `√2 Γ((L+1)/2) / Γ(L/2)`: mean norm of an `L`-dimensional standard normal vector.
pub fn chi_mean_scale(l: usize) -> f64 {
    assert!(l >= 1);
    let pi = std::f64::consts::PI;
    // Γ((k+1)/2)/Γ(k/2) via the two-step recurrence from k = 1 or k = 2
    let (mut ratio, mut k) = if l % 2 == 1 {
        (1.0 / pi.sqrt(), 1)
    } else {
        (pi.sqrt() / 2.0, 2)
    };
    while k < l {
        ratio *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    std::f64::consts::SQRT_2 * ratio
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSimulation {
    pub norms: Vec<f64>,
    pub histogram: Histogram,
    pub mean: f64,
}

/// Euclidean norms of `n_draws` Gaussian vectors with component standard
/// deviations given by `model` in dimension `l`.
pub fn simulate_norm_histogram(
    model: &DecayModel,
    l: usize,
    n_draws: usize,
    seed: u64,
    bin_width: Option<f64>,
) -> Result<NormSimulation> {
    if n_draws == 0 || l == 0 {
        return Err(Error::Config(
            "simulation needs n_draws >= 1 and l >= 1".into(),
        ));
    }
    let sig = model.sigmas(l);
    let mut rng = stream(seed, 0, 0, Purpose::Simulation);
    let norms: Vec<f64> = (0..n_draws)
        .map(|_| {
            sig.iter()
                .map(|s| {
                    let z: f64 = rng.sample(StandardNormal);
                    (s * z).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let histogram = Histogram::build(&norms, bin_width);
    let mean = neumaier_mean(&norms);
    Ok(NormSimulation {
        norms,
        histogram,
        mean,
    })
}

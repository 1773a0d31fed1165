//! Gaussian-mixture particle filter (LMCPF) and its pure-selection special case (LAPF).

use nalgebra::{DMatrix, DVector};

use super::spread::spread_control;
use super::weights::{pf_weights_approx, pf_weights_exact};
use super::{
    observation_distances, resampling_matrix, AnalysisNoise, FilterConfig, LocalAnalysis,
    LocalContext, PointDiagnostics,
};
use crate::ens_space::{a_norm, EnsembleSpaceQuantities};
use crate::error::{Error, Result};

/// Columns `β^(shift,ℓ) = γ(I + γA)⁻¹A(C − e_ℓ)`: the move of each particle's
/// posterior mean in ensemble space.
pub fn shift_matrix(q: &EnsembleSpaceQuantities) -> DMatrix<f64> {
    let s = q.spectral(|a, g| g * a / (1.0 + g * a));
    let sc = &s * &q.c;
    let mut shift = -s;
    for mut col in shift.column_iter_mut() {
        col += &sc;
    }
    shift
}

/// `G^(a)_ens = (γ⁻¹ I + A)⁻¹`, the posterior covariance of every mixture component.
pub fn posterior_cov_ens(q: &EnsembleSpaceQuantities) -> DMatrix<f64> {
    q.spectral(|a, g| g / (1.0 + g * a))
}

fn ones(l: usize) -> DVector<f64> {
    DVector::from_element(l, 1.0)
}

/// LMCPF local analysis:
/// `W = W̆ + W_shift W̆ + (κ_post G^(a)_ens)^(1/2) N σ`.
pub fn lmcpf_analysis(
    ctx: &LocalContext,
    cfg: &FilterConfig,
    noise: &AnalysisNoise,
    rho_prev: Option<f64>,
) -> Result<LocalAnalysis> {
    let l = ctx.members();
    let q = match ctx.ens_space(cfg.gamma(l)) {
        Ok(q) => q,
        Err(Error::AllWeightsZero) => return Ok(LocalAnalysis::identity(l, rho_prev, cfg.c0)),
        Err(e) => return Err(e),
    };
    let weights = if cfg.exact_weights {
        pf_weights_exact(&q)
    } else {
        pf_weights_approx(&q)
    };
    let w_breve = resampling_matrix(&weights, &noise.draws)?;
    let w_shift = shift_matrix(&q);
    let ga_ens = posterior_cov_ens(&q);
    let kappa_post = cfg.kappa_post;
    let ga_sqrt = q.spectral(|a, g| (kappa_post * g / (1.0 + g * a)).sqrt());
    let (rho_raw, rho, sigma) = spread_control(ctx, cfg, rho_prev);

    let mut transform = &w_breve + &w_shift * &w_breve;
    if sigma != 0.0 {
        transform += ga_sqrt * &noise.normal * sigma;
    }

    let (d_c, d_min) = observation_distances(&q);
    let mean_shift = &w_shift * ones(l) / l as f64;
    Ok(LocalAnalysis {
        transform,
        w_breve: Some(w_breve),
        w_shift: Some(w_shift),
        ga_ens: Some(ga_ens),
        weights: Some(weights),
        rho_raw,
        rho,
        sigma,
        observed: true,
        diag: PointDiagnostics {
            d_c,
            d_min,
            shift_norm: a_norm(&mean_shift, &q),
            n_obs: ctx.n_obs(),
        },
    })
}

/// LAPF local analysis: selection plus Gaussian jitter around the selected
/// particles with covariance `σ² B` (`W = W̆ + σ N / sqrt(L−1)`).
pub fn lapf_analysis(
    ctx: &LocalContext,
    cfg: &FilterConfig,
    noise: &AnalysisNoise,
    rho_prev: Option<f64>,
) -> Result<LocalAnalysis> {
    let l = ctx.members();
    let q = match ctx.ens_space(cfg.gamma(l)) {
        Ok(q) => q,
        Err(Error::AllWeightsZero) => return Ok(LocalAnalysis::identity(l, rho_prev, cfg.c0)),
        Err(e) => return Err(e),
    };
    let weights = if cfg.exact_weights {
        pf_weights_exact(&q)
    } else {
        pf_weights_approx(&q)
    };
    let w_breve = resampling_matrix(&weights, &noise.draws)?;
    let (rho_raw, rho, sigma) = spread_control(ctx, cfg, rho_prev);

    let mut transform = w_breve.clone();
    if sigma != 0.0 {
        transform += &noise.normal * (sigma / (l as f64 - 1.0).sqrt());
    }

    let (d_c, d_min) = observation_distances(&q);
    // the comparable "shift" is the mean move induced by selection
    let mean_move = (&w_breve * ones(l) - ones(l)) / l as f64;
    Ok(LocalAnalysis {
        transform,
        w_breve: Some(w_breve),
        w_shift: None,
        ga_ens: None,
        weights: Some(weights),
        rho_raw,
        rho,
        sigma,
        observed: true,
        diag: PointDiagnostics {
            d_c,
            d_min,
            shift_norm: a_norm(&mean_move, &q),
            n_obs: ctx.n_obs(),
        },
    })
}

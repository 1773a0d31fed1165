//! Innovation-based spread control for the particle-filter rejuvenation.

use nalgebra::DVector;

use super::{FilterConfig, LocalContext};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoEstimate {
    Value(f64),
    NoObservations,
    /// The ensemble has no spread in observation space, so the ratio is unbounded.
    Degenerate,
}

/// `ρ = (dᵀd − Tr R) / Tr(H B Hᵀ)`.
pub fn rho_spread(
    innovation: &DVector<f64>,
    err_var: &DVector<f64>,
    hbht_trace: f64,
) -> RhoEstimate {
    if innovation.is_empty() {
        return RhoEstimate::NoObservations;
    }
    if !(hbht_trace > 0.0) {
        return RhoEstimate::Degenerate;
    }
    RhoEstimate::Value((innovation.norm_squared() - err_var.sum()) / hbht_trace)
}

/// `ρ` at one analysis point, each observation's terms weighted by its
/// localization weight.
pub fn localized_rho(ctx: &LocalContext) -> RhoEstimate {
    let w = &ctx.loc_weights;
    let l = ctx.members();
    let scaled_innov = ctx.innovation.component_mul(&w.map(f64::sqrt));
    let scaled_var = ctx.err_var.component_mul(w);
    let trace: f64 = ctx
        .y_pert
        .row_iter()
        .zip(w.iter())
        .map(|(row, &wk)| wk * row.norm_squared())
        .sum::<f64>()
        / (l as f64 - 1.0);
    rho_spread(&scaled_innov, &scaled_var, trace)
}

/// Piecewise-linear map from ρ to the rejuvenation amplitude.
pub fn sigma_of_rho(rho: f64, cfg: &FilterConfig) -> f64 {
    if rho < cfg.rho0 {
        cfg.c0
    } else if rho > cfg.rho1 {
        cfg.c1
    } else {
        cfg.c0 + (cfg.c1 - cfg.c0) * (rho - cfg.rho0) / (cfg.rho1 - cfg.rho0)
    }
}

pub fn smooth_rho(prev: Option<f64>, raw: f64, alpha: f64) -> f64 {
    match prev {
        Some(p) => alpha * p + (1.0 - alpha) * raw,
        None => raw,
    }
}

/// Resolves `(ρ_raw, ρ_smoothed, σ)` for one analysis point.
pub(crate) fn spread_control(
    ctx: &LocalContext,
    cfg: &FilterConfig,
    rho_prev: Option<f64>,
) -> (Option<f64>, Option<f64>, f64) {
    match localized_rho(ctx) {
        RhoEstimate::Value(raw) => {
            let rho = smooth_rho(rho_prev, raw, cfg.smoothing_alpha);
            (Some(raw), Some(rho), sigma_of_rho(rho, cfg))
        }
        RhoEstimate::NoObservations => (None, rho_prev, cfg.c0),
        RhoEstimate::Degenerate => (None, rho_prev, cfg.c1),
    }
}

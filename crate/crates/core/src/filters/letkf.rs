use nalgebra::{DMatrix, DVector};

use super::{observation_distances, FilterConfig, LocalAnalysis, LocalContext, PointDiagnostics};
use crate::ens_space::{a_norm, EnsembleSpaceQuantities};
use crate::error::{Error, Result};
use crate::linalg::sym_inv_sqrt;

/// Mean-update weights `w = (I + γA)⁻¹ Yᵀ R⁻¹ (y − ȳ)`; the analysis mean is `x̄ + γ X w`.
pub fn letkf_mean_weights(
    q: &EnsembleSpaceQuantities,
    y_pert: &DMatrix<f64>,
    rinv_weights: &DVector<f64>,
    innovation: &DVector<f64>,
) -> DVector<f64> {
    let rhs = y_pert.tr_mul(&innovation.component_mul(rinv_weights));
    q.spectral_apply(|a, g| 1.0 / (1.0 + g * a), &rhs)
}

/// Square-root transform `W = (I + γA)^(−1/2)`.
pub fn letkf_transform(q: &EnsembleSpaceQuantities) -> Result<DMatrix<f64>> {
    let l = q.size();
    let m = DMatrix::identity(l, l) + &q.a * q.gamma;
    sym_inv_sqrt(&m)
}

/// Deterministic LETKF analysis: column `ℓ` of the result is
/// `x̄ + γXw + X W e_ℓ`, i.e. the returned transform is `W + γ w 𝟙ᵀ`.
pub fn letkf_analysis(ctx: &LocalContext, cfg: &FilterConfig) -> Result<LocalAnalysis> {
    let l = ctx.members();
    let gamma = cfg.letkf_inflation / (l as f64 - 1.0);
    let q = match ctx.ens_space(gamma) {
        Ok(q) => q,
        Err(Error::AllWeightsZero) => return Ok(LocalAnalysis::identity(l, None, 0.0)),
        Err(e) => return Err(e),
    };
    let w = letkf_mean_weights(&q, &ctx.y_pert, &ctx.rinv_weights(), &ctx.innovation);
    let mut transform = letkf_transform(&q)?;
    let mean_move = &w * gamma;
    for mut col in transform.column_iter_mut() {
        col += &mean_move;
    }
    let (d_c, d_min) = observation_distances(&q);
    Ok(LocalAnalysis {
        transform,
        w_breve: None,
        w_shift: None,
        ga_ens: None,
        weights: None,
        rho_raw: None,
        rho: None,
        sigma: 0.0,
        observed: true,
        diag: PointDiagnostics {
            d_c,
            d_min,
            shift_norm: a_norm(&mean_move, &q),
            n_obs: ctx.n_obs(),
        },
    })
}

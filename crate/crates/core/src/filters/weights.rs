use nalgebra::{DMatrix, DVector};

use crate::ens_space::EnsembleSpaceQuantities;

/// Exponentiates log-weights after shifting by their maximum and rescales them to
/// sum to the number of particles.
pub fn normalize_log_weights(log_w: &DVector<f64>) -> DVector<f64> {
    let l = log_w.len() as f64;
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = log_w.map(|v| (v - top).exp());
    let total = raw.sum();
    raw * (l / total)
}

/// `−½ (C − e_ℓ)ᵀ M (C − e_ℓ)` for every `ℓ`.
fn mixture_log_weights(m: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    let mc = m * c;
    let base = c.dot(&mc);
    DVector::from_fn(c.len(), |l, _| -0.5 * (base - 2.0 * mc[l] + m[(l, l)]))
}

/// Point-likelihood weights `w_ℓ ∝ exp(−½‖C − e_ℓ‖²_A)`, summing to `L`.
pub fn pf_weights_approx(q: &EnsembleSpaceQuantities) -> DVector<f64> {
    normalize_log_weights(&mixture_log_weights(&q.a, &q.c))
}

/// Marginal-likelihood weights of the Gaussian mixture: each particle carries
/// covariance `γI` in ensemble space, giving
/// `w_ℓ ∝ exp(−½ (C − e_ℓ)ᵀ A(I + γA)⁻¹ (C − e_ℓ))`, summing to `L`.
pub fn pf_weights_exact(q: &EnsembleSpaceQuantities) -> DVector<f64> {
    let m = q.spectral(|a, g| a / (1.0 + g * a));
    normalize_log_weights(&mixture_log_weights(&m, &q.c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ens_space::build_ens_space;

    fn two_member() -> EnsembleSpaceQuantities {
        let y = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0]);
        build_ens_space(
            &y,
            &DVector::from_element(2, 1.0),
            &DVector::from_vec(vec![3.0, 0.0]),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn two_member_weights_match_likelihood() {
        let w = pf_weights_approx(&two_member());
        // exponents 2 and 8: ‖d − Ye_ℓ‖² = 4 and 16
        let e = (-6.0f64).exp();
        assert!((w[0] - 2.0 / (1.0 + e)).abs() < 1e-14);
        assert!((w[1] - 2.0 * e / (1.0 + e)).abs() < 1e-14);
        assert!((w.sum() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_instance_gives_uniform_weights() {
        // C = 0 is equidistant from every e_ℓ when A is permutation symmetric
        let l = 4;
        let y = crate::ensemble::perturbations(&DMatrix::identity(l, l));
        let q =
            build_ens_space(&y, &DVector::from_element(l, 1.0), &DVector::zeros(l), 0.3).unwrap();
        let w = pf_weights_approx(&q);
        assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn shift_invariance_of_log_weights() {
        let lw = DVector::from_vec(vec![-3.0, 0.5, -1.25, 2.0]);
        let a = normalize_log_weights(&lw);
        let b = normalize_log_weights(&lw.add_scalar(1234.5));
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn exact_weights_limits() {
        let q = two_member();
        let approx = pf_weights_approx(&q);
        let small = pf_weights_exact(&q.with_gamma(1e-9));
        assert!(((small - &approx).component_div(&approx)).amax() < 1e-6);
        let big = pf_weights_exact(&q.with_gamma(1e8));
        assert!(big.max() - big.min() < 1e-6);
    }
}

//! The Bayesian update transformed into ensemble space.
//!
//! For observation-space perturbations `Y` (m × L), localized inverse error
//! variances `r⁻¹` and innovation `d = y − ȳ`:
//!
//! * `A = Yᵀ diag(r⁻¹) Y` is the metric that maps ensemble coordinates back to
//!   the observation norm, `‖β‖²_A = ‖Yβ‖²_{R⁻¹}`;
//! * `C` is the projected observation, solving `A C = Yᵀ diag(r⁻¹) d`.
//!
//! `A` always has `𝟙` in its null space, so `C` is taken as the minimum-norm
//! pseudo-inverse solution on `range(A)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SymEigen;

#[derive(Debug, Clone)]
pub struct EnsembleSpaceQuantities {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Per-particle covariance scale `κ/(L−1)`.
    pub gamma: f64,
    pub rank: usize,
    eigen: SymEigen,
}

pub fn build_ens_space(
    y_pert: &DMatrix<f64>,
    rinv_weights: &DVector<f64>,
    innovation: &DVector<f64>,
    gamma: f64,
) -> Result<EnsembleSpaceQuantities> {
    let m = y_pert.nrows();
    if rinv_weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: rinv_weights.len(),
        });
    }
    if innovation.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: innovation.len(),
        });
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Config(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if let Some(i) = rinv_weights.iter().position(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::NonPositiveInput(i));
    }
    if rinv_weights.iter().all(|&w| w == 0.0) {
        return Err(Error::AllWeightsZero);
    }

    // Scale rows by sqrt(r⁻¹) so that A = ỸᵀỸ is exactly symmetric.
    let sqrt_w = rinv_weights.map(f64::sqrt);
    let mut scaled = y_pert.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= sqrt_w[i];
    }
    let a = scaled.tr_mul(&scaled);
    let weighted_innov = innovation.component_mul(&sqrt_w);
    let rhs = scaled.tr_mul(&weighted_innov);

    let eigen = SymEigen::new(&a)?;
    let c = eigen.pseudo_solve(&rhs);
    let rank = eigen.numerical_rank();
    Ok(EnsembleSpaceQuantities {
        a,
        c,
        gamma,
        rank,
        eigen,
    })
}

impl EnsembleSpaceQuantities {
    /// Ensemble size `L`.
    pub fn size(&self) -> usize {
        self.c.len()
    }

    /// Same `A` and `C` with a different per-particle covariance scale.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn eigen(&self) -> &SymEigen {
        &self.eigen
    }

    /// Eigenvalues of `A`, with round-off negatives clamped to zero.
    pub fn a_eigenvalues(&self) -> Vec<f64> {
        self.eigen.values.iter().map(|v| v.max(0.0)).collect()
    }

    /// `V diag(f(a_i, γ)) Vᵀ` for eigenpairs `(a_i, v_i)` of `A`.
    pub fn spectral<F: Fn(f64, f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let g = self.gamma;
        self.eigen.map(|v| f(v.max(0.0), g))
    }

    pub fn spectral_apply<F: Fn(f64, f64) -> f64>(&self, f: F, b: &DVector<f64>) -> DVector<f64> {
        let g = self.gamma;
        self.eigen.map_apply(|v| f(v.max(0.0), g), b)
    }

    /// `βᵀ A β`, clamped at zero.
    pub fn quadratic(&self, beta: &DVector<f64>) -> f64 {
        (beta.dot(&(&self.a * beta))).max(0.0)
    }
}

/// `‖β‖_A = sqrt(βᵀ A β)`.
pub fn a_norm(beta: &DVector<f64>, q: &EnsembleSpaceQuantities) -> f64 {
    q.quadratic(beta).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn two_member_instance() -> EnsembleSpaceQuantities {
        let y = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0]);
        let w = DVector::from_element(2, 1.0);
        let d = DVector::from_vec(vec![3.0, 0.0]);
        build_ens_space(&y, &w, &d, 1.0).unwrap()
    }

    #[test]
    fn two_member_example() {
        let q = two_member_instance();
        let expect_a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((&q.a - expect_a).amax() < 1e-14);
        assert!((q.c[0] - 1.5).abs() < 1e-12);
        assert!((q.c[1] + 1.5).abs() < 1e-12);
        assert_eq!(q.rank, 1);
    }

    #[test]
    fn zero_perturbations_give_zero_a_and_c() {
        let y = DMatrix::zeros(3, 4);
        let w = DVector::from_element(3, 1.0);
        let d = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let q = build_ens_space(&y, &w, &d, 0.5).unwrap();
        assert_eq!(q.a.amax(), 0.0);
        assert_eq!(q.c.amax(), 0.0);
        assert_eq!(q.rank, 0);
    }

    #[test]
    fn all_zero_weights_is_an_error() {
        let y = DMatrix::from_element(2, 3, 1.0);
        let r = build_ens_space(&y, &DVector::zeros(2), &DVector::zeros(2), 1.0);
        assert!(matches!(r, Err(Error::AllWeightsZero)));
    }

    fn random_instance(
        seed: u64,
        l: usize,
        m: usize,
    ) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(m, l, |_, _| rng.random_range(-2.0..2.0));
        let y = crate::ensemble::perturbations(&raw);
        let w = DVector::from_fn(m, |_, _| rng.random_range(0.2..3.0));
        let d = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
        (y, w, d)
    }

    #[test]
    fn a_matches_triple_loop() {
        let (y, w, d) = random_instance(11, 4, 10);
        let q = build_ens_space(&y, &w, &d, 1.0 / 3.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..10 {
                    s += y[(k, i)] * w[k] * y[(k, j)];
                }
                assert!((q.a[(i, j)] - s).abs() < 1e-12);
            }
        }
        let ones = DVector::from_element(4, 1.0);
        assert!((&q.a * ones).amax() < 1e-12);
        assert_eq!(q.rank, 3);
    }

    #[test]
    fn a_norm_examples() {
        let q = two_member_instance();
        assert_eq!(a_norm(&DVector::zeros(2), &q), 0.0);
        assert!((a_norm(&DVector::from_vec(vec![1.0, 0.0]), &q) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn a_norm_matches_observation_space_norm() {
        for seed in 0..10 {
            let (y, w, d) = random_instance(seed, 5, 7);
            let q = build_ens_space(&y, &w, &d, 0.25).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 99);
            let beta = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let yb = &y * &beta;
            let obs_norm2: f64 = (0..7).map(|k| yb[k] * yb[k] * w[k]).sum();
            let ens = a_norm(&beta, &q).powi(2);
            assert!((ens - obs_norm2).abs() <= 1e-10 * obs_norm2.max(1e-300));
        }
    }

    #[test]
    fn projected_residual_orthogonal_to_range() {
        for seed in 20..30 {
            // more members than observations: A rank-deficient beyond the 𝟙 direction
            let (y, w, d) = random_instance(seed, 6, 3);
            let q = build_ens_space(&y, &w, &d, 0.2).unwrap();
            let rhs = y.tr_mul(&d.component_mul(&w));
            let resid = &q.a * &q.c - &rhs;
            // residual must have no component in range(A)
            let proj = q.a.tr_mul(&resid);
            assert!(proj.amax() <= 1e-10 * rhs.amax().max(1.0));
            assert!(q.rank <= 3);
        }
    }
}

//! Random instances and independent dense-matrix oracles shared by the integration tests.
#![allow(dead_code)]

use lmcpf_core::perturbations;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Linear-observation problem: perturbations `x`, operator `h`, `y = h x`,
/// diagonal error variances `r` and innovation `d`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub r: DVector<f64>,
    pub d: DVector<f64>,
    pub gamma: f64,
}

impl Instance {
    pub fn random<R: Rng>(rng: &mut R, max_n: usize, max_m: usize, max_l: usize) -> Self {
        let n = rng.random_range(1..=max_n);
        let m = rng.random_range(1..=max_m);
        let l = rng.random_range(2..=max_l);
        let x = perturbations(&gaussian_matrix(rng, n, l));
        let h = gaussian_matrix(rng, m, n);
        let y = &h * &x;
        let r = DVector::from_fn(m, |_, _| rng.random_range(0.3..3.0));
        let d = gaussian_vector(rng, m) * 2.0;
        let kappa = rng.random_range(0.2..5.0);
        Self {
            x,
            h,
            y,
            r,
            d,
            gamma: kappa / (l as f64 - 1.0),
        }
    }

    pub fn members(&self) -> usize {
        self.x.ncols()
    }

    pub fn rinv(&self) -> DVector<f64> {
        self.r.map(|v| 1.0 / v)
    }

    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.r)
    }

    /// `G = γ X Xᵀ`.
    pub fn state_cov(&self) -> DMatrix<f64> {
        &self.x * self.x.transpose() * self.gamma
    }

    /// State-space gain `G Hᵀ (R + H G Hᵀ)⁻¹` by a dense LU inverse.
    pub fn state_gain(&self) -> DMatrix<f64> {
        let g = self.state_cov();
        let s = self.r_matrix() + &self.h * &g * self.h.transpose();
        let s_inv = s
            .lu()
            .try_inverse()
            .expect("innovation covariance is invertible");
        g * self.h.transpose() * s_inv
    }

    /// Gain written with observation-space perturbations, `γ X Yᵀ (R + γ Y Yᵀ)⁻¹`.
    pub fn obs_space_gain(&self) -> DMatrix<f64> {
        let s = self.r_matrix() + &self.y * self.y.transpose() * self.gamma;
        let s_inv = s
            .lu()
            .try_inverse()
            .expect("innovation covariance is invertible");
        &self.x * self.y.transpose() * s_inv * self.gamma
    }
}

pub fn frobenius_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Columns of a 3 × 2 orthonormal basis of the plane orthogonal to `𝟙`.
fn plane_basis() -> (DVector<f64>, DVector<f64>) {
    let u = DVector::from_vec(vec![1.0, -1.0, 0.0]) / 2f64.sqrt();
    let v = DVector::from_vec(vec![1.0, 1.0, -2.0]) / 6f64.sqrt();
    (u, v)
}

/// Mixture weights for three particles by direct 2-D integration of
/// `∫ N(d; Y(e_ℓ + u), R) N(u; 0, γ I) du` over the plane orthogonal to `𝟙`
/// (the `𝟙` direction is invisible to `Y` and integrates out). Trapezoid rule on
/// `±8√γ`; the integrand is a smooth Gaussian, so the rule converges spectrally.
pub fn quadrature_weights_l3(
    y: &DMatrix<f64>,
    r: &DVector<f64>,
    d: &DVector<f64>,
    gamma: f64,
) -> DVector<f64> {
    assert_eq!(y.ncols(), 3);
    let (u, v) = plane_basis();
    let half = 8.0 * gamma.sqrt();
    let nodes = 801;
    let h = 2.0 * half / (nodes - 1) as f64;
    let mut raw = DVector::zeros(3);
    for l in 0..3 {
        let mut e = DVector::zeros(3);
        e[l] = 1.0;
        let base = d - y * &e;
        let (yu, yv) = (y * &u, y * &v);
        let mut total = 0.0;
        for i in 0..nodes {
            let s = -half + h * i as f64;
            let wi = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            for j in 0..nodes {
                let t = -half + h * j as f64;
                let wj = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
                let res = &base - &yu * s - &yv * t;
                let misfit: f64 = res.iter().zip(r.iter()).map(|(e, rv)| e * e / rv).sum();
                let prior = (s * s + t * t) / gamma;
                total += wi * wj * (-0.5 * (misfit + prior)).exp();
            }
        }
        raw[l] = total;
    }
    let sum = raw.sum();
    raw * (3.0 / sum)
}

/// Small Lorenz96 experiment used by the cycled tests.
pub fn small_l96_config(cycles: usize) -> lmcpf_core::ExperimentConfig {
    lmcpf_core::ExperimentConfig {
        members: 10,
        cycles,
        spinup_cycles: cycles / 4,
        truth_burn_in_steps: 200,
        model: lmcpf_core::ModelSpec::lorenz96_with(16, 8.0),
        ..Default::default()
    }
}

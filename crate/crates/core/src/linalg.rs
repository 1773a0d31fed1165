//! Symmetric eigen-based matrix functions used throughout ensemble space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative rank tolerance for pseudo-inverse solves (fraction of the largest eigenvalue).
pub const RANK_RTOL: f64 = 1e-10;
/// Negative eigenvalues down to `-PSD_RTOL * lambda_max` are treated as round-off.
pub const PSD_RTOL: f64 = 1e-8;
const SYMMETRY_RTOL: f64 = 1e-10;
const PD_RTOL: f64 = 1e-12;

/// Eigendecomposition `M = V diag(values) Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Decomposes `m` after checking symmetry. The symmetric part is used so that
    /// round-off asymmetry does not leak into the eigenvectors.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(m)?;
        let sym = (m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0_f64, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        scaled * self.vectors.transpose()
    }

    /// `V diag(f(λ)) Vᵀ b` without forming the matrix.
    pub fn map_apply<F: Fn(f64) -> f64>(&self, f: F, b: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.vectors.tr_mul(b);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= f(self.values[j]);
        }
        &self.vectors * coeffs
    }

    /// Number of eigenvalues above `RANK_RTOL * λ_max`.
    pub fn numerical_rank(&self) -> usize {
        let cutoff = self.rank_cutoff();
        self.values.iter().filter(|&&v| v > cutoff).count()
    }

    fn rank_cutoff(&self) -> f64 {
        RANK_RTOL * self.max_value()
    }

    /// Minimum-norm least-squares solution of `M x = b`; components along
    /// eigenvalues below the rank cutoff are dropped.
    pub fn pseudo_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let cutoff = self.rank_cutoff();
        self.map_apply(|v| if v > cutoff && v > 0.0 { 1.0 / v } else { 0.0 }, b)
    }
}

pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Symmetric inverse square root `S` with `S·S = M⁻¹` for symmetric positive definite `M`.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(m)?;
    let lam_min = eig.min_value();
    let tol = PD_RTOL * eig.values.amax();
    if !(lam_min > tol) || lam_min <= 0.0 {
        return Err(Error::NotPositiveDefinite(lam_min));
    }
    Ok(eig.map(|v| 1.0 / v.sqrt()))
}

/// Symmetric positive semidefinite square root of `M`. Eigenvalues within
/// `-PSD_RTOL·λ_max` of zero are clamped; anything more negative is an error.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymEigen::new(m)?;
    psd_sqrt_from_eigen(&eig)
}

pub(crate) fn psd_sqrt_from_eigen(eig: &SymEigen) -> Result<DMatrix<f64>> {
    let lam_min = eig.min_value();
    if eig.dim() > 0 && lam_min < -PSD_RTOL * eig.max_value() {
        return Err(Error::NotPositiveSemidefinite(lam_min));
    }
    Ok(eig.map(|v| v.max(0.0).sqrt()))
}

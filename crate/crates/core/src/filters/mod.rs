//! Local analysis algorithms.
//!
//! Each filter works on one analysis point at a time and returns an `L × L`
//! transform `W` such that the local analysis ensemble is `x̄ + X W`. The
//! transforms are then interpolated onto the model grid by [`assemble_global`].

mod assemble;
mod letkf;
mod lmcpf;
mod resampling;
mod spread;
mod weights;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ens_space::{a_norm, build_ens_space, EnsembleSpaceQuantities};
use crate::error::{Error, Result};
use crate::obs::{localization_weights, LocalizationSpec, ObservationBatch};

pub use assemble::{assemble_global, interpolate_field, interpolation_stencil, AnalysisGrid};
pub use letkf::{letkf_analysis, letkf_mean_weights, letkf_transform};
pub use lmcpf::{lapf_analysis, lmcpf_analysis, posterior_cov_ens, shift_matrix};
pub use resampling::{resampling_matrix, selection_indices};
pub use spread::{localized_rho, rho_spread, sigma_of_rho, smooth_rho, RhoEstimate};
pub use weights::{normalize_log_weights, pf_weights_approx, pf_weights_exact};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Letkf,
    Lapf,
    Lmcpf,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Letkf => "letkf",
            FilterKind::Lapf => "lapf",
            FilterKind::Lmcpf => "lmcpf",
        }
    }

    pub fn is_particle_filter(&self) -> bool {
        !matches!(self, FilterKind::Letkf)
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "letkf" => Ok(FilterKind::Letkf),
            "lapf" => Ok(FilterKind::Lapf),
            "lmcpf" => Ok(FilterKind::Lmcpf),
            other => Err(Error::Config(format!("unknown filter kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// Particle uncertainty scale, `γ = κ/(L−1)`.
    pub kappa: f64,
    /// Inflation of the ensemble-space posterior covariance used for rejuvenation draws.
    pub kappa_post: f64,
    pub c0: f64,
    pub c1: f64,
    pub rho0: f64,
    pub rho1: f64,
    /// Exponential smoothing of ρ across cycles: `ρ = α ρ_prev + (1−α) ρ_raw`.
    pub smoothing_alpha: f64,
    pub loc: LocalizationSpec,
    pub seed: u64,
    /// Use the marginal-likelihood weights instead of the point-likelihood weights.
    pub exact_weights: bool,
    /// Share resampling draws and the Gaussian matrix `N` across analysis points.
    pub shared_noise: bool,
    /// Multiplicative prior inflation for the LETKF (`γ = inflation/(L−1)`).
    pub letkf_inflation: f64,
    /// Standard deviation, per unit `σ(ρ)`, of state-space noise added at grid points
    /// where the background ensemble has collapsed onto a single state (particle
    /// filters only). Ensemble-space rejuvenation cannot create spread there.
    pub additive_jitter: f64,
    pub qc_enabled: bool,
    pub k_qc: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            kind: FilterKind::Lmcpf,
            kappa: 2.5,
            kappa_post: 1.0,
            c0: 0.02,
            c1: 0.5,
            rho0: 1.0,
            rho1: 1.5,
            smoothing_alpha: 0.7,
            loc: LocalizationSpec::default(),
            seed: 0,
            exact_weights: false,
            shared_noise: true,
            letkf_inflation: 1.0,
            additive_jitter: 1.0,
            qc_enabled: true,
            k_qc: 3.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.kappa > 0.0) || !(self.kappa_post > 0.0) {
            return bad(format!(
                "kappa and kappa_post must be positive (got {}, {})",
                self.kappa, self.kappa_post
            ));
        }
        if !(0.0 <= self.c0 && self.c0 <= self.c1) {
            return bad(format!("need 0 <= c0 <= c1 (got {}, {})", self.c0, self.c1));
        }
        if !(self.rho0 < self.rho1) {
            return bad(format!(
                "need rho0 < rho1 (got {}, {})",
                self.rho0, self.rho1
            ));
        }
        if !(0.0..1.0).contains(&self.smoothing_alpha) {
            return bad(format!(
                "smoothing_alpha must lie in [0, 1), got {}",
                self.smoothing_alpha
            ));
        }
        if !(self.letkf_inflation > 0.0) || !(self.additive_jitter >= 0.0) {
            return bad("letkf_inflation must be positive and additive_jitter non-negative".into());
        }
        if self.qc_enabled && !(self.k_qc > 0.0) {
            return bad(format!("k_qc must be positive, got {}", self.k_qc));
        }
        self.loc.validate()
    }

    /// `κ/(L−1)`.
    pub fn gamma(&self, members: usize) -> f64 {
        self.kappa / (members as f64 - 1.0)
    }
}

/// Observation-space quantities restricted to the observations that influence one
/// analysis point.
#[derive(Debug, Clone)]
pub struct LocalContext {
    /// Rows of `Y` for the local observations.
    pub y_pert: DMatrix<f64>,
    pub innovation: DVector<f64>,
    pub err_var: DVector<f64>,
    pub loc_weights: DVector<f64>,
}

impl LocalContext {
    /// Selects observations with non-zero localization weight around `point`.
    pub fn new(
        y_pert: &DMatrix<f64>,
        innovation: &DVector<f64>,
        batch: &ObservationBatch,
        loc: &LocalizationSpec,
        point: f64,
    ) -> Self {
        let w = localization_weights(loc, point, batch);
        let idx: Vec<usize> = (0..batch.len()).filter(|&i| w[i] > 0.0).collect();
        let l = y_pert.ncols();
        Self {
            y_pert: DMatrix::from_fn(idx.len(), l, |k, j| y_pert[(idx[k], j)]),
            innovation: DVector::from_fn(idx.len(), |k, _| innovation[idx[k]]),
            err_var: DVector::from_fn(idx.len(), |k, _| batch.err_var[idx[k]]),
            loc_weights: DVector::from_fn(idx.len(), |k, _| w[idx[k]]),
        }
    }

    /// Unlocalized context from explicit quantities.
    pub fn from_parts(
        y_pert: DMatrix<f64>,
        innovation: DVector<f64>,
        err_var: DVector<f64>,
    ) -> Self {
        let m = innovation.len();
        Self {
            y_pert,
            innovation,
            err_var,
            loc_weights: DVector::from_element(m, 1.0),
        }
    }

    pub fn members(&self) -> usize {
        self.y_pert.ncols()
    }

    pub fn n_obs(&self) -> usize {
        self.innovation.len()
    }

    /// Localized diagonal of `R⁻¹`.
    pub fn rinv_weights(&self) -> DVector<f64> {
        self.loc_weights.component_div(&self.err_var)
    }

    pub fn ens_space(&self, gamma: f64) -> Result<EnsembleSpaceQuantities> {
        if self.n_obs() == 0 {
            return Err(Error::AllWeightsZero);
        }
        build_ens_space(&self.y_pert, &self.rinv_weights(), &self.innovation, gamma)
    }
}

/// Random inputs of one local particle-filter analysis.
#[derive(Debug, Clone)]
pub struct AnalysisNoise {
    /// Stratified resampling offsets `r_ℓ ∈ (0, 1)`.
    pub draws: Vec<f64>,
    /// `L × L` standard normal matrix `N`.
    pub normal: DMatrix<f64>,
}

impl AnalysisNoise {
    pub fn zeros(l: usize) -> Self {
        Self {
            draws: vec![0.5; l],
            normal: DMatrix::zeros(l, l),
        }
    }

    pub fn draw<R: rand::Rng>(rng: &mut R, l: usize) -> Self {
        let draws = crate::rng::open_uniform(rng, l);
        let normal = crate::rng::standard_normal_matrix(rng, l, l);
        Self { draws, normal }
    }
}

/// Scalar diagnostics of one local analysis.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointDiagnostics {
    pub d_c: f64,
    pub d_min: f64,
    /// A-norm of the mean analysis move in ensemble space.
    pub shift_norm: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone)]
pub struct LocalAnalysis {
    /// Total transform: local analysis ensemble is `x̄ + X·transform`.
    pub transform: DMatrix<f64>,
    pub w_breve: Option<DMatrix<f64>>,
    pub w_shift: Option<DMatrix<f64>>,
    pub ga_ens: Option<DMatrix<f64>>,
    /// Particle weights normalized to sum `L`.
    pub weights: Option<DVector<f64>>,
    pub rho_raw: Option<f64>,
    /// Smoothed ρ carried to the next cycle.
    pub rho: Option<f64>,
    pub sigma: f64,
    /// False when no observation reached the point and `transform = I`.
    pub observed: bool,
    pub diag: PointDiagnostics,
}

impl LocalAnalysis {
    pub fn identity(l: usize, rho_prev: Option<f64>, sigma: f64) -> Self {
        Self {
            transform: DMatrix::identity(l, l),
            w_breve: None,
            w_shift: None,
            ga_ens: None,
            weights: None,
            rho_raw: None,
            rho: rho_prev,
            sigma,
            observed: false,
            diag: PointDiagnostics::default(),
        }
    }
}

/// Runs the configured filter at one analysis point.
pub fn analyze_point(
    ctx: &LocalContext,
    cfg: &FilterConfig,
    noise: &AnalysisNoise,
    rho_prev: Option<f64>,
) -> Result<LocalAnalysis> {
    match cfg.kind {
        FilterKind::Letkf => letkf_analysis(ctx, cfg),
        FilterKind::Lapf => lapf_analysis(ctx, cfg, noise, rho_prev),
        FilterKind::Lmcpf => lmcpf_analysis(ctx, cfg, noise, rho_prev),
    }
}

/// Distances of the projected observation to the ensemble mean and to the nearest member.
pub(crate) fn observation_distances(q: &EnsembleSpaceQuantities) -> (f64, f64) {
    let d_c = a_norm(&q.c, q);
    let d_min = crate::diagnostics::d_min(q);
    (d_c, d_min)
}

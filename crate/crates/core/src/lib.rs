//! Localized ensemble filters for cycled twin experiments.
//!
//! The crate implements three local analysis schemes on a common ensemble-space
//! algebra: the LETKF, a localized adaptive particle filter (LAPF) and the
//! localized mixture-coefficients particle filter (LMCPF), whose particles carry
//! Gaussian uncertainty `γ X Xᵀ` and are moved towards the observations before
//! resampling. Lorenz-63/96 models, a synthetic observation system, diagnostics
//! and an experiment driver complete the toolkit.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod ens_space;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod linalg;
pub mod models;
pub mod obs;
pub mod rng;

pub use ens_space::{a_norm, build_ens_space, EnsembleSpaceQuantities};
pub use ensemble::{ensemble_mean, perturbations, Ensemble, ObsSpaceEnsemble};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentRun};
pub use filters::{FilterConfig, FilterKind, LocalAnalysis};
pub use models::{ModelKind, ModelSpec};
pub use obs::{Grid, LocalizationSpec, ObservationBatch, TaperKind};

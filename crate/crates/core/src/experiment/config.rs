use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterConfig;
use crate::models::ModelSpec;
use crate::obs::{Grid, ObsNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleInit {
    /// Truth plus independent Gaussian noise per member.
    PerturbedTruth,
    /// `L` copies of one perturbed state: a fully degenerate ensemble.
    IdenticalCopies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub members: usize,
    pub cycles: usize,
    /// Leading cycles excluded from time-mean scores.
    pub spinup_cycles: usize,
    pub ensemble_init: EnsembleInit,
    /// Standard deviation of the initial perturbations.
    pub init_spread: f64,
    /// Model steps run from the fixed start state before cycle 0.
    pub truth_burn_in_steps: usize,
    /// Analysis at every `analysis_stride`-th grid point.
    pub analysis_stride: usize,
    pub forecast_lead_cycles: Vec<usize>,
    /// Launch a forecast from every `forecast_every`-th post-spinup analysis.
    pub forecast_every: usize,
    /// Also propagate an unassimilated copy of the initial ensemble.
    pub free_run: bool,
    /// Write every cycle's truth and analysis ensemble to `states.csv`.
    pub dump_states: bool,
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    #[serde(alias = "obs_network")]
    pub obs: ObsNetwork,
    pub filter: FilterConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            members: 40,
            cycles: 200,
            spinup_cycles: 50,
            ensemble_init: EnsembleInit::PerturbedTruth,
            init_spread: 1.0,
            truth_burn_in_steps: 1000,
            analysis_stride: 1,
            forecast_lead_cycles: vec![0, 1, 2, 4, 8],
            forecast_every: 1,
            free_run: true,
            dump_states: false,
            output_dir: PathBuf::from("out"),
            model: ModelSpec::lorenz96(),
            obs: ObsNetwork::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.members < 2 {
            return bad(format!("members must be >= 2, got {}", self.members));
        }
        if self.cycles < 1 {
            return bad("cycles must be >= 1".into());
        }
        if self.spinup_cycles >= self.cycles {
            return bad(format!(
                "spinup_cycles ({}) must be smaller than cycles ({})",
                self.spinup_cycles, self.cycles
            ));
        }
        if !(self.init_spread >= 0.0) || !self.init_spread.is_finite() {
            return bad(format!(
                "init_spread must be non-negative, got {}",
                self.init_spread
            ));
        }
        if self.analysis_stride == 0 || self.forecast_every == 0 {
            return bad("analysis_stride and forecast_every must be >= 1".into());
        }
        if self.obs.stride == 0 || !(self.obs.err_var > 0.0) {
            return bad("observation stride must be >= 1 and err_var positive".into());
        }
        self.model.validate()?;
        self.filter.validate()
    }

    pub fn grid(&self) -> Grid {
        Grid {
            n: self.model.dim(),
            cyclic: self.model.cyclic(),
        }
    }

    /// Seed of the filter's own draws (resampling, rejuvenation, jitter).
    /// Truth, observations and the initial ensemble depend on `seed` alone, so
    /// runs that differ only in the filter see identical observations.
    pub(crate) fn filter_seed(&self) -> u64 {
        self.seed
            ^ self
                .filter
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .rotate_left(17)
    }
}

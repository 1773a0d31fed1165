use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::runner::{mean_spread, ExperimentRun};
use crate::diagnostics::{crps_field, neumaier_mean, rmse_and_bias};
use crate::error::Result;
use crate::models::propagate;

/// Scores of ensemble forecasts at one lead time, averaged over launches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub lead_cycles: usize,
    pub launches: usize,
    pub rmse: f64,
    pub bias: f64,
    pub crps: f64,
    pub spread: f64,
}

struct LaunchScores {
    lead: usize,
    rmse: f64,
    bias: f64,
    crps: f64,
    spread: f64,
}

/// Free ensemble forecasts from the post-spinup analyses, scored against the truth
/// at each configured lead. A launch only contributes to leads that end inside
/// the experiment.
pub fn run_forecasts(cfg: &ExperimentConfig, run: &ExperimentRun) -> Result<Vec<ForecastRow>> {
    let mut leads = cfg.forecast_lead_cycles.clone();
    leads.sort_unstable();
    leads.dedup();
    let Some(&max_lead) = leads.last() else {
        return Ok(Vec::new());
    };
    let n = run.records.len();
    let launches: Vec<usize> = (cfg.spinup_cycles..n).step_by(cfg.forecast_every).collect();

    let per_launch: Vec<Vec<LaunchScores>> = launches
        .par_iter()
        .map(|&c| {
            let mut ens = run.records[c].analysis.clone();
            let mut out = Vec::new();
            for step in 0..=max_lead.min(n - 1 - c) {
                if step > 0 {
                    ens = propagate(&cfg.model, &ens)?;
                }
                if leads.binary_search(&step).is_ok() {
                    let truth = &run.records[c + step].truth;
                    let (rmse, bias) = rmse_and_bias(&ens.mean(), truth)?;
                    out.push(LaunchScores {
                        lead: step,
                        rmse,
                        bias,
                        crps: crps_field(&ens, truth)?,
                        spread: mean_spread(&ens),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(leads
        .iter()
        .map(|&lead| {
            let s: Vec<&LaunchScores> = per_launch
                .iter()
                .flatten()
                .filter(|s| s.lead == lead)
                .collect();
            let mean = |f: fn(&LaunchScores) -> f64| {
                neumaier_mean(&s.iter().map(|x| f(x)).collect::<Vec<_>>())
            };
            ForecastRow {
                lead_cycles: lead,
                launches: s.len(),
                rmse: mean(|x| x.rmse),
                bias: mean(|x| x.bias),
                crps: mean(|x| x.crps),
                spread: mean(|x| x.spread),
            }
        })
        .collect())
}

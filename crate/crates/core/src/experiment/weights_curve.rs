use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::runner::{CycleRunner, PointOrder};
use crate::error::{Error, Result};
use crate::filters::{pf_weights_approx, pf_weights_exact, LocalContext};

/// Normalized weights (sum `L`) of one particle at one `κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsCurveRow {
    pub kappa: f64,
    pub member: usize,
    pub exact: f64,
    pub approx: f64,
}

/// `count` values of `κ` from `1e-9` to `max`, evenly spaced after the first.
pub fn kappa_grid(max: f64, count: usize) -> Vec<f64> {
    let mut out = vec![1e-9];
    out.extend((1..count).map(|k| max * k as f64 / (count - 1) as f64));
    out
}

/// Exact and approximate weights of the context's particles for every `κ`.
pub fn compare_weights_curve(ctx: &LocalContext, kappas: &[f64]) -> Result<Vec<WeightsCurveRow>> {
    let l = ctx.members();
    let base = ctx.ens_space(1.0)?;
    let approx = pf_weights_approx(&base);
    let mut rows = Vec::with_capacity(kappas.len() * l);
    for &kappa in kappas {
        if !(kappa > 0.0) {
            return Err(Error::Config(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let exact = pf_weights_exact(&base.with_gamma(kappa / (l as f64 - 1.0)));
        rows.extend((0..l).map(|member| WeightsCurveRow {
            kappa,
            member,
            exact: exact[member],
            approx: approx[member],
        }));
    }
    Ok(rows)
}

/// Local context at analysis slot `point` of cycle `cycle` of the configured experiment.
pub fn weights_instance(
    cfg: &ExperimentConfig,
    cycle: usize,
    point: usize,
) -> Result<LocalContext> {
    let mut runner = CycleRunner::new(cfg, PointOrder::Parallel)?;
    let points = runner.analysis_grid().points.clone();
    let Some(&grid_point) = points.get(point) else {
        return Err(Error::Config(format!(
            "analysis point {point} out of range (0..{})",
            points.len()
        )));
    };
    for _ in 0..cycle {
        runner.step()?;
    }
    let prep = runner.prepare()?;
    Ok(prep.context(grid_point, &cfg.filter.loc))
}

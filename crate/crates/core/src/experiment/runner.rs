use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{EnsembleInit, ExperimentConfig};
use crate::diagnostics::{
    crps_field, neumaier_mean, rmse_and_bias, spread_per_variable, spread_stats, CycleDiagnostics,
    CycleRow, PointRecord, SpreadStats,
};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::filters::{
    analyze_point, assemble_global, interpolate_field, AnalysisGrid, AnalysisNoise, FilterConfig,
    LocalAnalysis, LocalContext,
};
use crate::models::{integrate, propagate, ModelKind};
use crate::obs::{
    apply_h_ensemble, generate_twin_obs, qc_filter, LocalizationSpec, ObservationBatch,
};
use crate::rng::{standard_normal_matrix, stream, Purpose};

/// Relative spread below which a grid point counts as collapsed.
const COLLAPSE_RTOL: f64 = 1e-12;

/// Order in which analysis points are evaluated. All orders give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointOrder {
    #[default]
    Parallel,
    Sequential,
    Reversed,
}

#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub cycle: usize,
    pub truth: DVector<f64>,
    pub analysis: Ensemble,
    pub diagnostics: CycleDiagnostics,
}

/// Forecast step done, observations drawn and screened; ready for local analyses.
#[derive(Debug, Clone)]
pub struct PreparedCycle {
    pub cycle: usize,
    pub truth: DVector<f64>,
    pub background: Ensemble,
    pub free: Option<Ensemble>,
    /// Observations that passed quality control.
    pub batch: ObservationBatch,
    pub n_obs: usize,
    /// Rows of `Y` for the accepted observations.
    pub y_pert: DMatrix<f64>,
    pub innovation: DVector<f64>,
    shared_noise: Option<AnalysisNoise>,
    filter_seed: u64,
}

impl PreparedCycle {
    pub fn context(&self, point: usize, loc: &LocalizationSpec) -> LocalContext {
        LocalContext::new(
            &self.y_pert,
            &self.innovation,
            &self.batch,
            loc,
            point as f64,
        )
    }

    fn noise(&self, slot: usize) -> AnalysisNoise {
        match &self.shared_noise {
            Some(n) => n.clone(),
            None => {
                let mut rng = stream(
                    self.filter_seed,
                    self.cycle as u64,
                    slot as u64 + 1,
                    Purpose::Resampling,
                );
                AnalysisNoise::draw(&mut rng, self.background.size())
            }
        }
    }

    /// Local analyses at `points` (grid indices), slot `k` using `rho_prev[k]`.
    pub fn analyze(
        &self,
        filter: &FilterConfig,
        points: &[usize],
        rho_prev: &[Option<f64>],
        order: PointOrder,
    ) -> Result<Vec<LocalAnalysis>> {
        if rho_prev.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: rho_prev.len(),
            });
        }
        let one = |k: usize| {
            let ctx = self.context(points[k], &filter.loc);
            analyze_point(&ctx, filter, &self.noise(k), rho_prev[k])
        };
        match order {
            PointOrder::Parallel => (0..points.len()).into_par_iter().map(one).collect(),
            PointOrder::Sequential => (0..points.len()).map(one).collect(),
            PointOrder::Reversed => {
                let mut out = (0..points.len())
                    .rev()
                    .map(one)
                    .collect::<Result<Vec<_>>>()?;
                out.reverse();
                Ok(out)
            }
        }
    }
}

/// Stateful driver advancing one assimilation cycle at a time.
#[derive(Debug, Clone)]
pub struct CycleRunner {
    cfg: ExperimentConfig,
    template: ObservationBatch,
    agrid: AnalysisGrid,
    truth: DVector<f64>,
    ens: Ensemble,
    free: Option<Ensemble>,
    rho_prev: Vec<Option<f64>>,
    cycle: usize,
    order: PointOrder,
}

fn with_cycle(e: Error, cycle: usize) -> Error {
    match e {
        Error::NonFiniteState { member, .. } => Error::NonFiniteState {
            cycle: Some(cycle),
            member,
        },
        other => other,
    }
}

fn start_state(cfg: &ExperimentConfig) -> DVector<f64> {
    let n = cfg.model.dim();
    let mut x = match cfg.model.kind {
        ModelKind::Lorenz96 { forcing, .. } => DVector::from_element(n, forcing),
        ModelKind::Lorenz63 { .. } => DVector::from_element(n, 1.0),
    };
    x[0] += 0.01;
    let mut rng = stream(cfg.seed, 0, 0, Purpose::TruthInit);
    x + standard_normal_matrix(&mut rng, n, 1).column(0) * 1e-3
}

impl CycleRunner {
    pub fn new(cfg: &ExperimentConfig, order: PointOrder) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid();
        let template = cfg.obs.template(grid)?;
        let agrid = AnalysisGrid::with_stride(grid, cfg.analysis_stride)?;
        let truth = integrate(&cfg.model, &start_state(cfg), cfg.truth_burn_in_steps)
            .map_err(|e| with_cycle(e, 0))?;

        let (n, l) = (cfg.model.dim(), cfg.members);
        let mut rng = stream(cfg.seed, 0, 0, Purpose::EnsembleInit);
        let ens = match cfg.ensemble_init {
            EnsembleInit::PerturbedTruth => {
                let noise = standard_normal_matrix(&mut rng, n, l) * cfg.init_spread;
                let mut m = noise;
                for mut col in m.column_iter_mut() {
                    col += &truth;
                }
                Ensemble::new(m)?
            }
            EnsembleInit::IdenticalCopies => {
                let x0 =
                    &truth + standard_normal_matrix(&mut rng, n, 1).column(0) * cfg.init_spread;
                Ensemble::identical_copies(&x0, l)?
            }
        };
        let free = cfg.free_run.then(|| ens.clone());
        Ok(Self {
            cfg: cfg.clone(),
            template,
            rho_prev: vec![None; agrid.len()],
            agrid,
            truth,
            ens,
            free,
            cycle: 0,
            order,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn truth(&self) -> &DVector<f64> {
        &self.truth
    }

    pub fn analysis_grid(&self) -> &AnalysisGrid {
        &self.agrid
    }

    pub fn rho_state(&self) -> &[Option<f64>] {
        &self.rho_prev
    }

    /// Forecast, observe and quality-control the next cycle without changing the runner.
    pub fn prepare(&self) -> Result<PreparedCycle> {
        let c = self.cycle;
        let model = &self.cfg.model;
        let truth =
            integrate(model, &self.truth, model.steps_per_cycle).map_err(|e| with_cycle(e, c))?;
        let background = propagate(model, &self.ens).map_err(|e| with_cycle(e, c))?;
        let free = match &self.free {
            Some(f) => Some(propagate(model, f).map_err(|e| with_cycle(e, c))?),
            None => None,
        };

        let mut rng = stream(self.cfg.seed, c as u64, 0, Purpose::Observation);
        let obs = generate_twin_obs(&truth, &self.template, &mut rng)?;
        let y_ens = apply_h_ensemble(&obs, &background)?;
        let y_full = y_ens.perturbations();
        let l = background.size();
        let accepted = if self.cfg.filter.qc_enabled {
            let spread = DVector::from_fn(obs.len(), |i, _| {
                (y_full.row(i).norm_squared() / (l as f64 - 1.0)).sqrt()
            });
            qc_filter(&obs, &y_ens.mean, &spread, self.cfg.filter.k_qc)?.accepted
        } else {
            vec![true; obs.len()]
        };
        let idx: Vec<usize> = (0..obs.len()).filter(|&i| accepted[i]).collect();
        let batch = obs.subset(&accepted);
        let y_pert = DMatrix::from_fn(idx.len(), l, |k, j| y_full[(idx[k], j)]);
        let innovation = DVector::from_fn(idx.len(), |k, _| batch.values[k] - y_ens.mean[idx[k]]);

        let filter_seed = self.cfg.filter_seed();
        let shared_noise = self.cfg.filter.shared_noise.then(|| {
            let mut rng = stream(filter_seed, c as u64, 0, Purpose::Resampling);
            AnalysisNoise::draw(&mut rng, l)
        });
        Ok(PreparedCycle {
            cycle: c,
            truth,
            background,
            free,
            n_obs: obs.len(),
            batch,
            y_pert,
            innovation,
            shared_noise,
            filter_seed,
        })
    }

    /// Assembles the analysis from local results, records diagnostics and advances the state.
    pub fn finish(
        &mut self,
        prep: PreparedCycle,
        analyses: Vec<LocalAnalysis>,
    ) -> Result<CycleRecord> {
        let c = prep.cycle;
        let filter = &self.cfg.filter;
        let transforms: Vec<DMatrix<f64>> = analyses.iter().map(|a| a.transform.clone()).collect();
        let mut analysis = assemble_global(&prep.background, &transforms, &self.agrid)
            .map_err(|e| with_cycle(e, c))?;

        if filter.kind.is_particle_filter() && filter.additive_jitter > 0.0 {
            let bg_mean = prep.background.mean();
            let bg_spread = spread_per_variable(&prep.background);
            let collapsed: Vec<usize> = (0..bg_spread.len())
                .filter(|&j| bg_spread[j] <= COLLAPSE_RTOL * (1.0 + bg_mean[j].abs()))
                .collect();
            if !collapsed.is_empty() {
                let sigmas: Vec<f64> = analyses.iter().map(|a| a.sigma).collect();
                let field = interpolate_field(&self.agrid, &sigmas)?;
                let mut rng = stream(prep.filter_seed, c as u64, 0, Purpose::Jitter);
                let l = analysis.size();
                let noise = standard_normal_matrix(&mut rng, analysis.dim(), l);
                let mut members = analysis.into_members();
                for &j in &collapsed {
                    let mut row = noise.row(j).into_owned();
                    let mean = row.sum() / l as f64;
                    row.add_scalar_mut(-mean);
                    let mut target = members.row_mut(j);
                    target += row * (field[j] * filter.additive_jitter);
                }
                analysis = Ensemble::new(members).map_err(|e| with_cycle(e, c))?;
            }
        }

        let points: Vec<PointRecord> = analyses
            .iter()
            .zip(&self.agrid.points)
            .map(|(a, &p)| PointRecord {
                point: p,
                d_c: a.diag.d_c,
                d_min: a.diag.d_min,
                shift_norm: a.diag.shift_norm,
                rho_raw: a.rho_raw,
                rho: a.rho,
                sigma: a.sigma,
                n_obs: a.diag.n_obs,
                observed: a.observed,
            })
            .collect();
        let (rmse, bias) = rmse_and_bias(&analysis.mean(), &prep.truth)?;
        let (background_rmse, _) = rmse_and_bias(&prep.background.mean(), &prep.truth)?;
        let free_rmse = match &prep.free {
            Some(f) => Some(rmse_and_bias(&f.mean(), &prep.truth)?.0),
            None => None,
        };
        let diagnostics = CycleDiagnostics {
            cycle: c,
            points,
            spread: spread_stats(&analysis),
            rmse,
            bias,
            crps: crps_field(&analysis, &prep.truth)?,
            background_rmse,
            free_rmse,
            n_obs: prep.n_obs,
            n_obs_passed_qc: prep.batch.len(),
        };

        self.rho_prev = analyses.iter().map(|a| a.rho).collect();
        self.truth = prep.truth.clone();
        self.ens = analysis.clone();
        self.free = prep.free;
        self.cycle += 1;
        Ok(CycleRecord {
            cycle: c,
            truth: prep.truth,
            analysis,
            diagnostics,
        })
    }

    pub fn step(&mut self) -> Result<CycleRecord> {
        let prep = self.prepare()?;
        let analyses = prep.analyze(
            &self.cfg.filter,
            &self.agrid.points,
            &self.rho_prev,
            self.order,
        )?;
        self.finish(prep, analyses)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    /// Spread of the ensemble before the first cycle.
    pub initial_spread: SpreadStats,
    pub records: Vec<CycleRecord>,
}

/// Time means over the post-spinup cycles.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RunSummary {
    pub cycles_scored: usize,
    pub mean_rmse: f64,
    pub mean_bias: f64,
    pub mean_crps: f64,
    pub mean_background_rmse: f64,
    pub mean_free_rmse: Option<f64>,
    pub mean_spread: f64,
    pub min_spread: f64,
    /// Standard deviation of the truth over variables and scored cycles.
    pub climatological_std: f64,
}

impl ExperimentRun {
    pub fn scored(&self) -> &[CycleRecord] {
        &self.records[self.config.spinup_cycles.min(self.records.len())..]
    }

    pub fn cycle_rows(&self) -> Vec<CycleRow> {
        self.records
            .iter()
            .map(|r| CycleRow::from(&r.diagnostics))
            .collect()
    }

    pub fn diagnostics(&self) -> Vec<CycleDiagnostics> {
        self.records.iter().map(|r| r.diagnostics.clone()).collect()
    }

    pub fn summary(&self) -> RunSummary {
        let s = self.scored();
        let col = |f: &dyn Fn(&CycleDiagnostics) -> f64| -> f64 {
            neumaier_mean(&s.iter().map(|r| f(&r.diagnostics)).collect::<Vec<_>>())
        };
        let free: Vec<f64> = s.iter().filter_map(|r| r.diagnostics.free_rmse).collect();
        let values: Vec<f64> = s.iter().flat_map(|r| r.truth.iter().copied()).collect();
        let mu = neumaier_mean(&values);
        let var = neumaier_mean(&values.iter().map(|v| (v - mu).powi(2)).collect::<Vec<_>>());
        RunSummary {
            cycles_scored: s.len(),
            mean_rmse: col(&|d| d.rmse),
            mean_bias: col(&|d| d.bias),
            mean_crps: col(&|d| d.crps),
            mean_background_rmse: col(&|d| d.background_rmse),
            mean_free_rmse: (!free.is_empty()).then(|| neumaier_mean(&free)),
            mean_spread: col(&|d| d.spread.mean),
            min_spread: s
                .iter()
                .map(|r| r.diagnostics.spread.min)
                .fold(f64::INFINITY, f64::min),
            climatological_std: var.sqrt(),
        }
    }

    /// First cycle whose mean spread exceeds `floor`.
    pub fn first_cycle_with_spread_above(&self, floor: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.diagnostics.spread.mean > floor)
            .map(|r| r.cycle)
    }
}

pub fn run_cycle_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    run_cycle_experiment_with(cfg, PointOrder::Parallel)
}

pub fn run_cycle_experiment_with(
    cfg: &ExperimentConfig,
    order: PointOrder,
) -> Result<ExperimentRun> {
    let mut runner = CycleRunner::new(cfg, order)?;
    let initial_spread = spread_stats(runner.ensemble());
    let mut records = Vec::with_capacity(cfg.cycles);
    for _ in 0..cfg.cycles {
        records.push(runner.step()?);
    }
    Ok(ExperimentRun {
        config: cfg.clone(),
        initial_spread,
        records,
    })
}

/// Mean per-variable spread of an ensemble (convenience for callers holding records).
pub(crate) fn mean_spread(ens: &Ensemble) -> f64 {
    neumaier_mean(spread_per_variable(ens).as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterKind;
    use crate::models::ModelSpec;

    fn small(kind: FilterKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            members: 8,
            cycles: 6,
            spinup_cycles: 2,
            truth_burn_in_steps: 100,
            model: ModelSpec::lorenz96_with(12, 8.0),
            ..ExperimentConfig::default()
        };
        cfg.filter.kind = kind;
        cfg
    }

    #[test]
    fn no_observations_gives_propagated_background() {
        let mut cfg = small(FilterKind::Lmcpf);
        cfg.cycles = 1;
        cfg.spinup_cycles = 0;
        // every observation is rejected by a vanishing QC threshold
        cfg.filter.k_qc = 1e-300;
        let runner = CycleRunner::new(&cfg, PointOrder::Sequential).unwrap();
        let prep = runner.prepare().unwrap();
        assert_eq!(prep.batch.len(), 0);
        let run = run_cycle_experiment(&cfg).unwrap();
        let bg = propagate(&cfg.model, runner.ensemble()).unwrap();
        let ana = &run.records[0].analysis;
        assert!((ana.members() - bg.members()).amax() < 1e-12);
        assert!(run.records[0]
            .diagnostics
            .points
            .iter()
            .all(|p| !p.observed));
    }

    #[test]
    fn letkf_without_obs_is_exact_persistence() {
        let mut cfg = small(FilterKind::Letkf);
        cfg.cycles = 1;
        cfg.spinup_cycles = 0;
        cfg.filter.k_qc = 1e-300;
        let runner = CycleRunner::new(&cfg, PointOrder::Sequential).unwrap();
        let bg = propagate(&cfg.model, runner.ensemble()).unwrap();
        let run = run_cycle_experiment(&cfg).unwrap();
        assert!((run.records[0].analysis.members() - bg.members()).amax() < 1e-12);
    }

    #[test]
    fn orders_agree_bitwise() {
        for kind in [FilterKind::Letkf, FilterKind::Lapf, FilterKind::Lmcpf] {
            let cfg = small(kind);
            let a = run_cycle_experiment_with(&cfg, PointOrder::Parallel).unwrap();
            let b = run_cycle_experiment_with(&cfg, PointOrder::Reversed).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                assert_eq!(x.analysis, y.analysis);
                assert_eq!(x.diagnostics, y.diagnostics);
            }
        }
    }

    #[test]
    fn filter_choice_does_not_change_observations() {
        let a = CycleRunner::new(&small(FilterKind::Letkf), PointOrder::Sequential).unwrap();
        let b = CycleRunner::new(&small(FilterKind::Lmcpf), PointOrder::Sequential).unwrap();
        assert_eq!(
            a.prepare().unwrap().batch.values,
            b.prepare().unwrap().batch.values
        );
    }

    #[test]
    fn identical_copies_start_degenerate() {
        let mut cfg = small(FilterKind::Lmcpf);
        cfg.ensemble_init = EnsembleInit::IdenticalCopies;
        let mut runner = CycleRunner::new(&cfg, PointOrder::Sequential).unwrap();
        assert!(mean_spread(runner.ensemble()) < 1e-12);
        let rec = runner.step().unwrap();
        // collapsed points get state-space jitter of size σ = c1
        assert!(rec.diagnostics.spread.min > 0.1);
        assert!(rec
            .diagnostics
            .points
            .iter()
            .all(|p| p.sigma == cfg.filter.c1));
    }
}

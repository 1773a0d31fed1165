//! Cycled twin experiments: truth run, synthetic observations, local analyses,
//! assembly and diagnostics.

mod config;
mod forecast;
mod output;
mod runner;
mod weights_curve;

pub use config::{EnsembleInit, ExperimentConfig};
pub use forecast::{run_forecasts, ForecastRow};
pub use output::{
    read_states, read_states_file, recompute_diagnostics, write_forecast_csv, write_outputs,
    write_states, DiagRow, OutputFiles, StateSnapshot,
};
pub use runner::{
    run_cycle_experiment, run_cycle_experiment_with, CycleRecord, CycleRunner, ExperimentRun,
    PointOrder, PreparedCycle, RunSummary,
};
pub use weights_curve::{compare_weights_curve, kappa_grid, weights_instance, WeightsCurveRow};

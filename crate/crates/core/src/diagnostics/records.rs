use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SpreadStats;
use crate::error::Result;

/// Diagnostics of one analysis point in one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub point: usize,
    pub d_c: f64,
    pub d_min: f64,
    pub shift_norm: f64,
    pub rho_raw: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: f64,
    pub n_obs: usize,
    pub observed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleDiagnostics {
    pub cycle: usize,
    pub points: Vec<PointRecord>,
    pub spread: SpreadStats,
    pub rmse: f64,
    pub bias: f64,
    pub crps: f64,
    pub background_rmse: f64,
    pub free_rmse: Option<f64>,
    pub n_obs: usize,
    pub n_obs_passed_qc: usize,
}

/// Row of the per-point CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub cycle: usize,
    pub point: usize,
    pub d_c: f64,
    pub d_min: f64,
    /// A-norm of the mean move (shift for LMCPF/LETKF, selection move for LAPF).
    pub shift_norm: f64,
    pub rho_raw: Option<f64>,
    pub rho: Option<f64>,
    pub sigma: f64,
    pub n_obs: usize,
    pub observed: bool,
}

/// Row of the per-cycle CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub cycle: usize,
    pub rmse: f64,
    pub bias: f64,
    pub crps: f64,
    pub background_rmse: f64,
    pub free_rmse: Option<f64>,
    pub spread_mean: f64,
    pub spread_min: f64,
    pub spread_max: f64,
    pub n_obs: usize,
    pub n_obs_passed_qc: usize,
}

impl From<&CycleDiagnostics> for CycleRow {
    fn from(d: &CycleDiagnostics) -> Self {
        Self {
            cycle: d.cycle,
            rmse: d.rmse,
            bias: d.bias,
            crps: d.crps,
            background_rmse: d.background_rmse,
            free_rmse: d.free_rmse,
            spread_mean: d.spread.mean,
            spread_min: d.spread.min,
            spread_max: d.spread.max,
            n_obs: d.n_obs,
            n_obs_passed_qc: d.n_obs_passed_qc,
        }
    }
}

pub fn write_point_csv<W: Write>(out: W, cycles: &[CycleDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in cycles {
        for p in &c.points {
            w.serialize(PointRow {
                cycle: c.cycle,
                point: p.point,
                d_c: p.d_c,
                d_min: p.d_min,
                shift_norm: p.shift_norm,
                rho_raw: p.rho_raw,
                rho: p.rho,
                sigma: p.sigma,
                n_obs: p.n_obs,
                observed: p.observed,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cycle_csv<W: Write>(out: W, rows: &[CycleRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cycle_rows<R: Read>(input: R) -> Result<Vec<CycleRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

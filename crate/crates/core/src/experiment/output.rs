use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::forecast::ForecastRow;
use super::runner::ExperimentRun;
use crate::diagnostics::{
    crps_field, rmse_and_bias, spread_stats, write_cycle_csv, write_point_csv,
};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

/// Truth and analysis ensemble of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub cycle: usize,
    pub truth: DVector<f64>,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub cycles: PathBuf,
    pub points: PathBuf,
    pub manifest: PathBuf,
    pub final_state: PathBuf,
    pub states: Option<PathBuf>,
}

/// Writes states as rows `cycle, member, x0, x1, ...`; the truth uses member `truth`.
pub fn write_states<W: Write>(out: W, states: &[StateSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = states.first().map_or(0, |s| s.truth.len());
    let mut header = vec!["cycle".to_string(), "member".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for s in states {
        let mut row = vec![s.cycle.to_string(), "truth".to_string()];
        row.extend(s.truth.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
        for l in 0..s.ensemble.size() {
            let mut row = vec![s.cycle.to_string(), l.to_string()];
            row.extend(s.ensemble.members().column(l).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_states<R: Read>(input: R) -> Result<Vec<StateSnapshot>> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |msg: String| Error::Config(format!("malformed state file: {msg}"));
    let mut out: Vec<StateSnapshot> = Vec::new();
    let mut pending: Option<(usize, DVector<f64>, Vec<DVector<f64>>)> = None;
    let finish = |p: (usize, DVector<f64>, Vec<DVector<f64>>)| -> Result<StateSnapshot> {
        Ok(StateSnapshot {
            cycle: p.0,
            truth: p.1,
            ensemble: Ensemble::from_columns(&p.2)?,
        })
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(bad("row has no state values".into()));
        }
        let cycle: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("cycle {:?}", &rec[0])))?;
        let values: Vec<f64> = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("value {v:?}"))))
            .collect::<Result<_>>()?;
        let x = DVector::from_vec(values);
        if &rec[1] == "truth" {
            if let Some(p) = pending.take() {
                out.push(finish(p)?);
            }
            pending = Some((cycle, x, Vec::new()));
        } else {
            match pending.as_mut() {
                Some(p) if p.0 == cycle => p.2.push(x),
                _ => return Err(bad(format!("member row before truth row in cycle {cycle}"))),
            }
        }
    }
    if let Some(p) = pending.take() {
        out.push(finish(p)?);
    }
    Ok(out)
}

/// Scores recomputed from saved states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub cycle: usize,
    pub rmse: f64,
    pub bias: f64,
    pub crps: f64,
    pub spread_mean: f64,
    pub spread_min: f64,
    pub spread_max: f64,
}

pub fn recompute_diagnostics(states: &[StateSnapshot]) -> Result<Vec<DiagRow>> {
    states
        .iter()
        .map(|s| {
            let (rmse, bias) = rmse_and_bias(&s.ensemble.mean(), &s.truth)?;
            let spread = spread_stats(&s.ensemble);
            Ok(DiagRow {
                cycle: s.cycle,
                rmse,
                bias,
                crps: crps_field(&s.ensemble, &s.truth)?,
                spread_mean: spread.mean,
                spread_min: spread.min,
                spread_max: spread.max,
            })
        })
        .collect()
}

pub fn write_forecast_csv<W: Write>(out: W, rows: &[ForecastRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn snapshot(run: &ExperimentRun, k: usize) -> StateSnapshot {
    let r = &run.records[k];
    StateSnapshot {
        cycle: r.cycle,
        truth: r.truth.clone(),
        ensemble: r.analysis.clone(),
    }
}

/// Writes `cycles.csv`, `points.csv`, `manifest.json`, `final_state.csv` and,
/// when enabled, `states.csv` into `dir`.
pub fn write_outputs(run: &ExperimentRun, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let files = OutputFiles {
        cycles: dir.join("cycles.csv"),
        points: dir.join("points.csv"),
        manifest: dir.join("manifest.json"),
        final_state: dir.join("final_state.csv"),
        states: run.config.dump_states.then(|| dir.join("states.csv")),
    };
    write_cycle_csv(create(&files.cycles)?, &run.cycle_rows())?;
    write_point_csv(create(&files.points)?, &run.diagnostics())?;
    if let Some(last) = run.records.len().checked_sub(1) {
        write_states(create(&files.final_state)?, &[snapshot(run, last)])?;
    }
    if let Some(path) = &files.states {
        let all: Vec<StateSnapshot> = (0..run.records.len()).map(|k| snapshot(run, k)).collect();
        write_states(create(path)?, &all)?;
    }

    let manifest = serde_json::json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": run.config.seed,
        "filter": run.config.filter.kind.name(),
        "config": run.config,
        "summary": run.summary(),
        "files": ["cycles.csv", "points.csv", "final_state.csv"],
    });
    let mut w = create(&files.manifest)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Config(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(files)
}

/// Reads a state file from disk.
pub fn read_states_file(path: &Path) -> Result<Vec<StateSnapshot>> {
    read_states(File::open(path)?)
}

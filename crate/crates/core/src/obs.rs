//! Synthetic observations, the interpolating observation operator, distance
//! based localization and first-guess quality control.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, ObsSpaceEnsemble};
use crate::error::{Error, Result};

/// One-dimensional model grid with `n` points at integer positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub cyclic: bool,
}

impl Grid {
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.cyclic {
            let period = self.n as f64;
            let d = d % period;
            d.min(period - d)
        } else {
            d
        }
    }

    fn check_position(&self, p: f64) -> Result<()> {
        let upper_ok = if self.cyclic {
            p < self.n as f64
        } else {
            p <= (self.n - 1) as f64
        };
        if p.is_finite() && p >= 0.0 && upper_ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                position: p,
                n: self.n,
            })
        }
    }

    /// Grid neighbours and linear weights for position `p`.
    fn stencil(&self, p: f64) -> (usize, usize, f64) {
        let i0 = p.floor() as usize;
        let frac = p - i0 as f64;
        let i1 = if self.cyclic {
            (i0 + 1) % self.n
        } else {
            (i0 + 1).min(self.n - 1)
        };
        (i0, i1, frac)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub values: DVector<f64>,
    /// Diagonal of `R`.
    pub err_var: DVector<f64>,
    /// Observation locations in grid-index units; fractional positions are
    /// linearly interpolated.
    pub positions: Vec<f64>,
    pub grid: Grid,
}

impl ObservationBatch {
    pub fn new(
        values: DVector<f64>,
        err_var: DVector<f64>,
        positions: Vec<f64>,
        grid: Grid,
    ) -> Result<Self> {
        let m = positions.len();
        for len in [values.len(), err_var.len()] {
            if len != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: len,
                });
            }
        }
        if let Some(i) = err_var.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveInput(i));
        }
        for &p in &positions {
            grid.check_position(p)?;
        }
        Ok(Self {
            values,
            err_var,
            positions,
            grid,
        })
    }

    /// Network layout with zeroed values, to be filled by [`generate_twin_obs`].
    pub fn template(positions: Vec<f64>, err_var: f64, grid: Grid) -> Result<Self> {
        let m = positions.len();
        Self::new(
            DVector::zeros(m),
            DVector::from_element(m, err_var),
            positions,
            grid,
        )
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn subset(&self, keep: &[bool]) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep[i]).collect();
        Self {
            values: DVector::from_fn(idx.len(), |k, _| self.values[idx[k]]),
            err_var: DVector::from_fn(idx.len(), |k, _| self.err_var[idx[k]]),
            positions: idx.iter().map(|&i| self.positions[i]).collect(),
            grid: self.grid,
        }
    }
}

/// Regular observation network: every `stride`-th grid point, shifted by `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsNetwork {
    pub stride: usize,
    pub offset: f64,
    pub err_var: f64,
}

impl Default for ObsNetwork {
    fn default() -> Self {
        Self {
            stride: 1,
            offset: 0.0,
            err_var: 1.0,
        }
    }
}

impl ObsNetwork {
    pub fn template(&self, grid: Grid) -> Result<ObservationBatch> {
        if self.stride == 0 {
            return Err(Error::Config("observation stride must be >= 1".into()));
        }
        let positions: Vec<f64> = (0..grid.n)
            .step_by(self.stride)
            .map(|i| i as f64 + self.offset)
            .collect();
        ObservationBatch::template(positions, self.err_var, grid)
    }
}

/// Observation operator `H`: linear interpolation of `x` at each position.
pub fn apply_h(batch: &ObservationBatch, x: &DVector<f64>) -> Result<DVector<f64>> {
    let grid = batch.grid;
    if x.len() != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: x.len(),
        });
    }
    let mut out = DVector::zeros(batch.len());
    for (k, &p) in batch.positions.iter().enumerate() {
        grid.check_position(p)?;
        let (i0, i1, frac) = grid.stencil(p);
        out[k] = if frac == 0.0 {
            x[i0]
        } else {
            (1.0 - frac) * x[i0] + frac * x[i1]
        };
    }
    Ok(out)
}

/// `H` applied member by member.
pub fn apply_h_ensemble(batch: &ObservationBatch, ens: &Ensemble) -> Result<ObsSpaceEnsemble> {
    let mut values = DMatrix::zeros(batch.len(), ens.size());
    for l in 0..ens.size() {
        values.set_column(l, &apply_h(batch, &ens.member(l))?);
    }
    Ok(ObsSpaceEnsemble::new(values))
}

/// `H(truth)` plus independent Gaussian errors with the template's variances.
pub fn generate_twin_obs<R: Rng>(
    truth: &DVector<f64>,
    template: &ObservationBatch,
    rng: &mut R,
) -> Result<ObservationBatch> {
    let clean = apply_h(template, truth)?;
    let values = DVector::from_fn(template.len(), |k, _| {
        let e: f64 = rng.sample(StandardNormal);
        clean[k] + e * template.err_var[k].sqrt()
    });
    Ok(ObservationBatch {
        values,
        ..template.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaperKind {
    GaspariCohn,
    Boxcar,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationSpec {
    pub kind: TaperKind,
    /// Half-width in grid units; Gaspari–Cohn vanishes at twice this distance.
    pub radius: f64,
}

impl Default for LocalizationSpec {
    fn default() -> Self {
        Self {
            kind: TaperKind::GaspariCohn,
            radius: 4.0,
        }
    }
}

impl LocalizationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind != TaperKind::None && !(self.radius > 0.0) {
            return Err(Error::Config(format!(
                "localization radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn weight(&self, distance: f64) -> f64 {
        match self.kind {
            TaperKind::None => 1.0,
            TaperKind::Boxcar => {
                if distance <= self.radius {
                    1.0
                } else {
                    0.0
                }
            }
            TaperKind::GaspariCohn => gaspari_cohn(distance / self.radius),
        }
    }
}

/// Fifth-order piecewise rational Gaspari–Cohn taper of `ratio = d / c`,
/// compactly supported on `[0, 2]`.
pub fn gaspari_cohn(ratio: f64) -> f64 {
    let r = ratio.abs();
    if r <= 1.0 {
        (((-0.25 * r + 0.5) * r + 0.625) * r - 5.0 / 3.0) * r * r + 1.0
    } else if r < 2.0 {
        ((((r / 12.0 - 0.5) * r + 0.625) * r + 5.0 / 3.0) * r - 5.0) * r + 4.0 - 2.0 / (3.0 * r)
    } else {
        0.0
    }
}

pub fn localization_weights(
    loc: &LocalizationSpec,
    analysis_point: f64,
    batch: &ObservationBatch,
) -> DVector<f64> {
    DVector::from_fn(batch.len(), |k, _| {
        let d = batch.grid.distance(analysis_point, batch.positions[k]);
        loc.weight(d).clamp(0.0, 1.0)
    })
}

#[derive(Debug, Clone)]
pub struct QcOutcome {
    pub batch: ObservationBatch,
    pub accepted: Vec<bool>,
    pub kept: usize,
}

/// Keeps observation `i` iff `|y_i − ȳ_i| ≤ k·sqrt(r_i + s_i²)` against the first guess.
pub fn qc_filter(
    batch: &ObservationBatch,
    fg_mean_obs: &DVector<f64>,
    fg_spread_obs: &DVector<f64>,
    k_qc: f64,
) -> Result<QcOutcome> {
    for len in [fg_mean_obs.len(), fg_spread_obs.len()] {
        if len != batch.len() {
            return Err(Error::DimensionMismatch {
                expected: batch.len(),
                got: len,
            });
        }
    }
    let accepted: Vec<bool> = (0..batch.len())
        .map(|i| {
            let bound = k_qc * (batch.err_var[i] + fg_spread_obs[i].powi(2)).sqrt();
            (batch.values[i] - fg_mean_obs[i]).abs() <= bound
        })
        .collect();
    let kept = accepted.iter().filter(|&&a| a).count();
    Ok(QcOutcome {
        batch: batch.subset(&accepted),
        accepted,
        kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn line(n: usize) -> Grid {
        Grid { n, cyclic: false }
    }

    #[test]
    fn identity_operator() {
        let grid = line(4);
        let b = ObservationBatch::template(vec![0.0, 1.0, 2.0, 3.0], 1.0, grid).unwrap();
        let x = DVector::from_vec(vec![5.0, 6.0, 7.0, 8.0]);
        assert_eq!(apply_h(&b, &x).unwrap(), x);
    }

    #[test]
    fn selection_and_interpolation() {
        let grid = line(4);
        let x = DVector::from_vec(vec![5.0, 6.0, 7.0, 8.0]);
        let b = ObservationBatch::template(vec![2.0], 1.0, grid).unwrap();
        assert_eq!(apply_h(&b, &x).unwrap()[0], 7.0);
        let x = DVector::from_fn(6, |i, _| 10.0 * i as f64);
        let b = ObservationBatch::template(vec![1.5], 1.0, line(6)).unwrap();
        assert!((apply_h(&b, &x).unwrap()[0] - 15.0).abs() < 1e-14);
    }

    #[test]
    fn cyclic_interpolation_wraps() {
        let grid = Grid { n: 4, cyclic: true };
        let x = DVector::from_vec(vec![0.0, 1.0, 2.0, 10.0]);
        let b = ObservationBatch::template(vec![3.5], 1.0, grid).unwrap();
        assert!((apply_h(&b, &x).unwrap()[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_positions() {
        assert!(matches!(
            ObservationBatch::template(vec![4.0], 1.0, line(4)),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(ObservationBatch::template(vec![-0.5], 1.0, Grid { n: 4, cyclic: true }).is_err());
    }

    #[test]
    fn noiseless_limit() {
        let grid = line(5);
        let t = ObservationBatch::template(vec![0.0, 2.5, 4.0], 1e-20, grid).unwrap();
        let truth = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let obs =
            generate_twin_obs(&truth, &t, &mut stream(1, 0, 0, Purpose::Observation)).unwrap();
        let clean = apply_h(&t, &truth).unwrap();
        assert!((obs.values - clean).amax() < 1e-8);
    }

    #[test]
    fn twin_obs_reproducible() {
        let t = ObservationBatch::template(vec![0.0, 1.0], 2.0, line(3)).unwrap();
        let truth = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a = generate_twin_obs(&truth, &t, &mut stream(9, 4, 0, Purpose::Observation)).unwrap();
        let b = generate_twin_obs(&truth, &t, &mut stream(9, 4, 0, Purpose::Observation)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaspari_cohn_values() {
        assert_eq!(gaspari_cohn(0.0), 1.0);
        assert_eq!(gaspari_cohn(2.0), 0.0);
        assert_eq!(gaspari_cohn(3.5), 0.0);
        // both branches meet at 5/24
        assert!((gaspari_cohn(1.0) - 5.0 / 24.0).abs() < 1e-14);
        assert!((gaspari_cohn(1.0 + 1e-12) - 5.0 / 24.0).abs() < 1e-10);
        assert!(gaspari_cohn(1.999_999) < 1e-12);
    }

    #[test]
    fn localization_kinds() {
        let grid = Grid {
            n: 10,
            cyclic: true,
        };
        let b = ObservationBatch::template(vec![0.0, 2.0, 4.0, 9.0], 1.0, grid).unwrap();
        let gc = LocalizationSpec {
            kind: TaperKind::GaspariCohn,
            radius: 2.0,
        };
        let w = localization_weights(&gc, 0.0, &b);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 5.0 / 24.0).abs() < 1e-14);
        assert_eq!(w[2], 0.0);
        // cyclic neighbour at distance 1
        assert!((w[3] - gaspari_cohn(0.5)).abs() < 1e-15);
        let boxcar = LocalizationSpec {
            kind: TaperKind::Boxcar,
            radius: 2.0,
        };
        assert_eq!(
            localization_weights(&boxcar, 0.0, &b).as_slice(),
            &[1.0, 1.0, 0.0, 1.0]
        );
        let none = LocalizationSpec {
            kind: TaperKind::None,
            radius: 0.0,
        };
        assert!(localization_weights(&none, 0.0, &b)
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn qc_examples() {
        let grid = line(3);
        let mut b = ObservationBatch::template(vec![0.0, 1.0, 2.0], 1.0, grid).unwrap();
        let fg = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let spread = DVector::zeros(3);
        b.values = fg.clone();
        let out = qc_filter(&b, &fg, &spread, 3.0).unwrap();
        assert_eq!(out.kept, 3);
        b.values[1] += 10.0;
        let out = qc_filter(&b, &fg, &spread, 3.0).unwrap();
        assert_eq!(out.accepted, vec![true, false, true]);
        assert_eq!(out.batch.positions, vec![0.0, 2.0]);
    }
}

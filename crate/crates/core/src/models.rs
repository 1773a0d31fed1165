//! Lorenz-63 and Lorenz-96 forecast models with a fixed-step RK4 integrator.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    Lorenz96 { forcing: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub dt: f64,
    pub steps_per_cycle: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::lorenz96()
    }
}

impl ModelSpec {
    pub fn lorenz63() -> Self {
        Self {
            kind: ModelKind::Lorenz63 {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
            },
            dt: 0.01,
            steps_per_cycle: 5,
        }
    }

    /// `n = 40`, `F = 8`, `dt = 0.05`, one step per cycle.
    pub fn lorenz96() -> Self {
        Self::lorenz96_with(40, 8.0)
    }

    pub fn lorenz96_with(n: usize, forcing: f64) -> Self {
        Self {
            kind: ModelKind::Lorenz96 { forcing, n },
            dt: 0.05,
            steps_per_cycle: 1,
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::Lorenz63 { .. } => 3,
            ModelKind::Lorenz96 { n, .. } => n,
        }
    }

    /// Whether grid distances wrap around.
    pub fn cyclic(&self) -> bool {
        matches!(self.kind, ModelKind::Lorenz96 { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let ModelKind::Lorenz96 { n, .. } = self.kind {
            if n < 4 {
                return Err(Error::Config(format!("lorenz96 needs n >= 4, got {n}")));
            }
        }
        Ok(())
    }
}

pub fn tendency(spec: &ModelSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    let n = spec.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(match spec.kind {
        ModelKind::Lorenz63 { sigma, rho, beta } => DVector::from_vec(vec![
            sigma * (x[1] - x[0]),
            x[0] * (rho - x[2]) - x[1],
            x[0] * x[1] - beta * x[2],
        ]),
        ModelKind::Lorenz96 { forcing, .. } => DVector::from_fn(n, |i, _| {
            let ip1 = (i + 1) % n;
            let im1 = (i + n - 1) % n;
            let im2 = (i + n - 2) % n;
            (x[ip1] - x[im2]) * x[im1] - x[i] + forcing
        }),
    })
}

/// One classical Runge–Kutta step of `dx/dt = f(x)`.
pub fn rk4_step_with<F>(f: F, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (0.5 * dt)))?;
    let k3 = f(&(x + &k2 * (0.5 * dt)))?;
    let k4 = f(&(x + &k3 * dt))?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteState {
            cycle: None,
            member: None,
        })
    }
}

pub fn rk4_step(spec: &ModelSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    rk4_step_with(|s| tendency(spec, s), x, spec.dt)
}

pub fn integrate(spec: &ModelSpec, x: &DVector<f64>, steps: usize) -> Result<DVector<f64>> {
    let mut state = x.clone();
    for _ in 0..steps {
        state = rk4_step(spec, &state)?;
    }
    Ok(state)
}

/// Advances every member `steps_per_cycle` steps. Members are independent and are
/// integrated in parallel; column order is preserved.
pub fn propagate(spec: &ModelSpec, ens: &Ensemble) -> Result<Ensemble> {
    let steps = spec.steps_per_cycle;
    let cols: Vec<DVector<f64>> = (0..ens.size())
        .into_par_iter()
        .map(|l| {
            integrate(spec, &ens.member(l), steps).map_err(|_| Error::NonFiniteState {
                cycle: None,
                member: Some(l),
            })
        })
        .collect::<Result<_>>()?;
    Ensemble::new(DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenz63_origin_is_fixed() {
        let f = tendency(&ModelSpec::lorenz63(), &DVector::zeros(3)).unwrap();
        assert_eq!(f.amax(), 0.0);
    }

    #[test]
    fn lorenz96_homogeneous_fixed_point() {
        let spec = ModelSpec::lorenz96();
        let x = DVector::from_element(40, 8.0);
        assert_eq!(tendency(&spec, &x).unwrap().amax(), 0.0);
        let next = rk4_step(&spec, &x).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn lorenz96_matches_index_loop() {
        let spec = ModelSpec::lorenz96_with(5, 8.0);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let f = tendency(&spec, &x).unwrap();
        // hand-evaluated with cyclic indices
        let expect = [
            (2.0 - 4.0) * 5.0 - 1.0 + 8.0,
            (3.0 - 5.0) * 1.0 - 2.0 + 8.0,
            (4.0 - 1.0) * 2.0 - 3.0 + 8.0,
            (5.0 - 2.0) * 3.0 - 4.0 + 8.0,
            (1.0 - 3.0) * 4.0 - 5.0 + 8.0,
        ];
        for i in 0..5 {
            assert_eq!(f[i], expect[i]);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let r = tendency(&ModelSpec::lorenz63(), &DVector::zeros(4));
        assert!(matches!(
            r,
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 4
            })
        ));
    }

    #[test]
    fn rk4_linear_decay_closed_form() {
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let h: f64 = 0.1;
        let next = rk4_step_with(|s| Ok(-s.clone()), &x, h).unwrap();
        let factor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        for i in 0..3 {
            assert!((next[i] - x[i] * factor).abs() < 1e-15);
        }
    }

    #[test]
    fn rk4_local_error_scales_fifth_order() {
        // one full step vs two half steps; the difference is O(dt^5)
        let x0 = DVector::from_vec(vec![1.0, 1.0, 20.0]);
        let diff = |dt: f64| {
            let mut spec = ModelSpec::lorenz63();
            spec.dt = dt;
            let full = rk4_step(&spec, &x0).unwrap();
            spec.dt = dt / 2.0;
            let half = integrate(&spec, &x0, 2).unwrap();
            (full - half).norm()
        };
        let ratio = diff(0.01) / diff(0.005);
        let order = ratio.log2();
        assert!((4.5..5.5).contains(&order), "local order {order}");
    }

    #[test]
    fn lorenz96_is_shift_equivariant() {
        let spec = ModelSpec::lorenz96_with(9, 8.0);
        let x = DVector::from_fn(9, |i, _| (i as f64 * 1.3).sin() * 3.0 + 2.0);
        let shift = |v: &DVector<f64>| DVector::from_fn(9, |i, _| v[(i + 1) % 9]);
        let a = tendency(&spec, &shift(&x)).unwrap();
        let b = shift(&tendency(&spec, &x).unwrap());
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn propagate_identity_and_composition() {
        let mut spec = ModelSpec::lorenz96_with(6, 8.0);
        let ens = Ensemble::new(DMatrix::from_fn(6, 3, |i, l| i as f64 + l as f64 * 0.3)).unwrap();
        spec.steps_per_cycle = 0;
        assert_eq!(propagate(&spec, &ens).unwrap(), ens);
        spec.steps_per_cycle = 4;
        let out = propagate(&spec, &ens).unwrap();
        for l in 0..3 {
            let mut x = ens.member(l);
            for _ in 0..4 {
                x = rk4_step(&spec, &x).unwrap();
            }
            assert_eq!(out.member(l), x);
        }
    }

    #[test]
    fn blow_up_reports_member() {
        let mut spec = ModelSpec::lorenz96_with(6, 8.0);
        spec.dt = 5.0;
        spec.steps_per_cycle = 50;
        let mut m = DMatrix::from_element(6, 2, 8.0);
        m[(0, 1)] = 30.0;
        let ens = Ensemble::new(m).unwrap();
        assert!(matches!(
            propagate(&spec, &ens),
            Err(Error::NonFiniteState {
                member: Some(1),
                ..
            })
        ));
    }
}

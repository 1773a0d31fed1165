//! Ensembles of model states and their observation-space images.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `n × L` matrix of state particles, one member per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: DMatrix<f64>,
}

impl Ensemble {
    pub fn new(members: DMatrix<f64>) -> Result<Self> {
        if members.nrows() == 0 {
            return Err(Error::InvalidEnsemble(
                "state dimension must be at least 1".into(),
            ));
        }
        if members.ncols() < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "need at least 2 members, got {}",
                members.ncols()
            )));
        }
        if let Some(idx) = members.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                cycle: None,
                member: Some(idx / members.nrows()),
            });
        }
        Ok(Self { members })
    }

    /// `l` identical copies of `state` (a degenerate ensemble).
    pub fn identical_copies(state: &DVector<f64>, l: usize) -> Result<Self> {
        Self::new(DMatrix::from_fn(state.len(), l, |i, _| state[i]))
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidEnsemble("no members".into()));
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn members(&self) -> &DMatrix<f64> {
        &self.members
    }

    pub fn into_members(self) -> DMatrix<f64> {
        self.members
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.members.nrows()
    }

    /// Member count `L`.
    pub fn size(&self) -> usize {
        self.members.ncols()
    }

    pub fn member(&self, l: usize) -> DVector<f64> {
        self.members.column(l).into_owned()
    }

    pub fn mean(&self) -> DVector<f64> {
        ensemble_mean(&self.members)
    }

    pub fn perturbations(&self) -> DMatrix<f64> {
        perturbations(&self.members)
    }
}

/// Column mean of an `n × L` matrix.
pub fn ensemble_mean(members: &DMatrix<f64>) -> DVector<f64> {
    let l = members.ncols() as f64;
    members.column_sum() / l
}

/// Deviations of each column from the column mean.
pub fn perturbations(members: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = ensemble_mean(members);
    let mut x = members.clone();
    for mut col in x.column_iter_mut() {
        col -= &mean;
    }
    x
}

/// Ensemble mapped through the observation operator: `m × L` values and their row mean.
#[derive(Debug, Clone)]
pub struct ObsSpaceEnsemble {
    pub values: DMatrix<f64>,
    pub mean: DVector<f64>,
}

impl ObsSpaceEnsemble {
    pub fn new(values: DMatrix<f64>) -> Self {
        let mean = ensemble_mean(&values);
        Self { values, mean }
    }

    pub fn perturbations(&self) -> DMatrix<f64> {
        let mut y = self.values.clone();
        for mut col in y.column_iter_mut() {
            col -= &self.mean;
        }
        y
    }
}

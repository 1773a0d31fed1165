use nalgebra::{DMatrix, RowDVector};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::obs::Grid;

/// Analysis points: a sorted subset of model grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisGrid {
    pub grid: Grid,
    pub points: Vec<usize>,
}

impl AnalysisGrid {
    pub fn new(grid: Grid, points: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::CoverageGap(0));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "analysis points must be strictly increasing".into(),
            ));
        }
        if let Some(&p) = points.iter().find(|&&p| p >= grid.n) {
            return Err(Error::IndexOutOfRange {
                position: p as f64,
                n: grid.n,
            });
        }
        Ok(Self { grid, points })
    }

    /// Every `stride`-th grid point. On a non-cyclic grid the last grid point
    /// is always included so that no model point needs extrapolation.
    pub fn with_stride(grid: Grid, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("analysis stride must be >= 1".into()));
        }
        let mut points: Vec<usize> = (0..grid.n).step_by(stride).collect();
        if !grid.cyclic && *points.last().unwrap() != grid.n - 1 {
            points.push(grid.n - 1);
        }
        Self::new(grid, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// For every model grid point, the two bracketing analysis points (indices into
/// `ag.points`) and the linear weight of the right one.
pub fn interpolation_stencil(ag: &AnalysisGrid) -> Result<Vec<(usize, usize, f64)>> {
    let n = ag.grid.n;
    let pts = &ag.points;
    let last = pts.len() - 1;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        match pts.binary_search(&j) {
            Ok(k) => out.push((k, k, 0.0)),
            Err(k) if k > 0 && k <= last => {
                let (a, b) = (pts[k - 1], pts[k]);
                out.push((k - 1, k, (j - a) as f64 / (b - a) as f64));
            }
            Err(_) if ag.grid.cyclic => {
                // between the last point and the first one, across the wrap
                let span = (pts[0] + n - pts[last]) as f64;
                let off = ((j + n - pts[last]) % n) as f64;
                out.push((last, 0, off / span));
            }
            Err(_) => return Err(Error::CoverageGap(j)),
        }
    }
    Ok(out)
}

/// Linear interpolation of per-analysis-point scalars onto the model grid.
pub fn interpolate_field(ag: &AnalysisGrid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != ag.len() {
        return Err(Error::DimensionMismatch {
            expected: ag.len(),
            got: values.len(),
        });
    }
    Ok(interpolation_stencil(ag)?
        .into_iter()
        .map(|(a, b, f)| {
            if f == 0.0 {
                values[a]
            } else {
                (1.0 - f) * values[a] + f * values[b]
            }
        })
        .collect())
}

/// Analysis ensemble on the model grid: row `j` is `x̄_j + X_j W(j)` where `W(j)`
/// interpolates the local transforms entry-wise.
pub fn assemble_global(
    ens: &Ensemble,
    transforms: &[DMatrix<f64>],
    ag: &AnalysisGrid,
) -> Result<Ensemble> {
    if transforms.len() != ag.len() {
        return Err(Error::DimensionMismatch {
            expected: ag.len(),
            got: transforms.len(),
        });
    }
    if ens.dim() != ag.grid.n {
        return Err(Error::DimensionMismatch {
            expected: ag.grid.n,
            got: ens.dim(),
        });
    }
    let mean = ens.mean();
    let x = ens.perturbations();
    let stencil = interpolation_stencil(ag)?;
    let mut out = DMatrix::zeros(ens.dim(), ens.size());
    for (j, &(a, b, f)) in stencil.iter().enumerate() {
        let xj: RowDVector<f64> = x.row(j).into_owned();
        let mut row = if f == 0.0 {
            &xj * &transforms[a]
        } else {
            (&xj * &transforms[a]) * (1.0 - f) + (&xj * &transforms[b]) * f
        };
        row.add_scalar_mut(mean[j]);
        out.set_row(j, &row);
    }
    Ensemble::new(out).map_err(|e| match e {
        Error::NonFiniteState { member, .. } => Error::NonFiniteState {
            cycle: None,
            member,
        },
        other => other,
    })
}

//! Fixed problem instances shared by the benchmarks.

use lmcpf_core::filters::{AnalysisNoise, LocalContext};
use nalgebra::{DMatrix, DVector};

/// Deterministic local context with `m` observations and `l` members.
pub fn synthetic_context(m: usize, l: usize) -> LocalContext {
    let raw = DMatrix::from_fn(m, l, |i, j| {
        ((i * 7 + j * 13) as f64 * 0.61).sin() + 0.1 * j as f64
    });
    let y = lmcpf_core::perturbations(&raw);
    let d = DVector::from_fn(m, |i, _| (i as f64 * 0.9).cos());
    LocalContext::from_parts(y, d, DVector::from_element(m, 1.0))
}

/// Fixed resampling offsets and a bounded pseudo-normal matrix, so runs are comparable.
pub fn synthetic_noise(l: usize) -> AnalysisNoise {
    AnalysisNoise {
        draws: (0..l).map(|i| (i as f64 + 0.5) / l as f64).collect(),
        normal: DMatrix::from_fn(l, l, |i, j| ((i * 31 + j * 17) as f64 * 0.37).sin() * 1.4),
    }
}

//! Monte Carlo checks of the stochastic pieces against their expected moments.

mod common;

use common::{gaussian_matrix, gaussian_vector, rng};
use lmcpf_core::filters::{localized_rho, LocalContext, RhoEstimate};
use lmcpf_core::obs::{generate_twin_obs, qc_filter, Grid};
use lmcpf_core::{perturbations, ObservationBatch};
use nalgebra::DVector;

#[test]
fn rho_is_near_one_for_a_consistent_ensemble() {
    // truth and members drawn from the same distribution: E[dᵀd] = m(b + r + b/L)
    let (m, l, b, r) = (12, 40, 2.0f64, 0.5f64);
    let mut g = rng(21);
    let trials = 3000;
    let mut total = 0.0;
    for _ in 0..trials {
        let members = gaussian_matrix(&mut g, m, l) * b.sqrt();
        let truth = gaussian_vector(&mut g, m) * b.sqrt();
        let obs = truth + gaussian_vector(&mut g, m) * r.sqrt();
        let mean = DVector::from_fn(m, |i, _| members.row(i).mean());
        let ctx = LocalContext::from_parts(
            perturbations(&members),
            obs - mean,
            DVector::from_element(m, r),
        );
        match localized_rho(&ctx) {
            RhoEstimate::Value(v) => total += v,
            other => panic!("unexpected {other:?}"),
        }
    }
    let mean_rho = total / trials as f64;
    let expect = 1.0 + 1.0 / l as f64;
    assert!((mean_rho - expect).abs() < 0.03, "mean ρ = {mean_rho}");
}

#[test]
fn twin_observation_errors_have_configured_variance() {
    let grid = Grid {
        n: 50,
        cyclic: true,
    };
    let template =
        ObservationBatch::template((0..50).map(|i| i as f64).collect(), 0.8, grid).unwrap();
    let truth = DVector::from_fn(50, |i, _| (i as f64 * 0.3).sin() * 4.0);
    let mut g = rng(22);
    let (mut sum, mut sq, mut count) = (0.0, 0.0, 0.0);
    for _ in 0..2000 {
        let obs = generate_twin_obs(&truth, &template, &mut g).unwrap();
        for (y, t) in obs.values.iter().zip(truth.iter()) {
            sum += y - t;
            sq += (y - t).powi(2);
            count += 1.0;
        }
    }
    let mean = sum / count;
    let var = sq / count - mean * mean;
    // 10⁵ samples: standard errors ≈ 0.003 (mean) and 0.0036 (variance)
    assert!(mean.abs() < 0.015, "mean {mean}");
    assert!((var - 0.8).abs() < 0.02, "variance {var}");
}

#[test]
fn three_sigma_quality_control_keeps_gaussian_departures() {
    // departures ~ N(0, r + s²) pass a k = 3 check with probability 0.9973
    let m = 100_000;
    let grid = Grid {
        n: m,
        cyclic: false,
    };
    let mut g = rng(23);
    let r = 1.5;
    let spread = gaussian_vector(&mut g, m).abs();
    let fg_mean = gaussian_vector(&mut g, m);
    let noise = gaussian_vector(&mut g, m);
    let values = DVector::from_fn(m, |i, _| {
        fg_mean[i] + noise[i] * (r + spread[i].powi(2)).sqrt()
    });
    let batch = ObservationBatch::new(
        values,
        DVector::from_element(m, r),
        (0..m).map(|i| i as f64).collect(),
        grid,
    )
    .unwrap();
    let out = qc_filter(&batch, &fg_mean, &spread, 3.0).unwrap();
    let frac = out.kept as f64 / m as f64;
    // binomial standard error ≈ 1.6e-4
    assert!((frac - 0.9973).abs() < 8e-4, "kept fraction {frac}");
}

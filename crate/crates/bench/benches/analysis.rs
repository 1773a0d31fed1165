use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lmcpf_bench::{synthetic_context, synthetic_noise};
use lmcpf_core::filters::{
    lapf_analysis, letkf_analysis, lmcpf_analysis, FilterConfig, FilterKind,
};
use lmcpf_core::models::integrate;
use lmcpf_core::ModelSpec;
use nalgebra::DVector;
use std::hint::black_box;

const SHAPES: [(usize, usize); 3] = [(10, 20), (40, 40), (100, 100)];

fn ens_space(c: &mut Criterion) {
    let mut group = c.benchmark_group("ens_space");
    for (m, l) in SHAPES {
        let ctx = synthetic_context(m, l);
        let gamma = 2.5 / (l as f64 - 1.0);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("m{m}_l{l}")),
            &ctx,
            |b, ctx| b.iter(|| ctx.ens_space(black_box(gamma)).unwrap()),
        );
    }
    group.finish();
}

fn local_analyses(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_analysis");
    for (m, l) in SHAPES {
        let ctx = synthetic_context(m, l);
        let noise = synthetic_noise(l);
        let id = format!("m{m}_l{l}");
        let letkf = FilterConfig {
            kind: FilterKind::Letkf,
            ..FilterConfig::default()
        };
        let lapf = FilterConfig {
            kind: FilterKind::Lapf,
            ..FilterConfig::default()
        };
        let lmcpf = FilterConfig {
            kind: FilterKind::Lmcpf,
            ..FilterConfig::default()
        };
        group.bench_function(BenchmarkId::new("letkf", &id), |b| {
            b.iter(|| letkf_analysis(black_box(&ctx), &letkf).unwrap())
        });
        group.bench_function(BenchmarkId::new("lapf", &id), |b| {
            b.iter(|| lapf_analysis(black_box(&ctx), &lapf, &noise, Some(1.1)).unwrap())
        });
        group.bench_function(BenchmarkId::new("lmcpf", &id), |b| {
            b.iter(|| lmcpf_analysis(black_box(&ctx), &lmcpf, &noise, Some(1.1)).unwrap())
        });
    }
    group.finish();
}

fn lorenz96_forecast(c: &mut Criterion) {
    let spec = ModelSpec::lorenz96();
    let x0 = DVector::from_fn(spec.dim(), |i, _| 8.0 + if i == 0 { 0.01 } else { 0.0 });
    c.bench_function("lorenz96_100_steps", |b| {
        b.iter(|| integrate(&spec, black_box(&x0), 100).unwrap())
    });
}

criterion_group!(benches, ens_space, local_analyses, lorenz96_forecast);
criterion_main!(benches);

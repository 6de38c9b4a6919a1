use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use centroidkit::cover::{Cloud, Cube};
use centroidkit::dual::{zp_norm, Backend};
use centroidkit::norms::{EmpiricalOracle, ExactEvenOracle, MpOracle};
use centroidkit::{c2k, sample, DistributionSpec, DualSolveOptions, MpNorm};

fn direction(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.1 * i as f64).collect()
}

fn local_model(c: &mut Criterion) {
    let mut g = c.benchmark_group("local_model");
    for n in [8, 32] {
        let t = direction(n);
        let cache = sample(&DistributionSpec::exponential(n), 20_000, 7).unwrap();
        let empirical = EmpiricalOracle::new(cache, 4.0).unwrap();
        g.bench_with_input(BenchmarkId::new("empirical_20k", n), &t, |b, t| {
            b.iter(|| empirical.local_model(black_box(t), true))
        });
        let exact = ExactEvenOracle::new(&DistributionSpec::exponential(n), 2).unwrap();
        g.bench_with_input(BenchmarkId::new("exact_k2", n), &t, |b, t| b.iter(|| exact.local_model(black_box(t), true)));
    }
    g.finish();
}

fn zp_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("zp_norm");
    let s = direction(16);
    let exact = MpNorm::exact_even(&DistributionSpec::exponential(16), 2).unwrap();
    let opts = DualSolveOptions::default();
    g.bench_function("exact_p4_n16", |b| b.iter(|| zp_norm(&exact, black_box(&s), &opts).unwrap()));
    let saa_opts = DualSolveOptions { backend: Backend::Saa, sample_budget: 20_000, ..Default::default() };
    let saa = MpNorm::from_spec(&DistributionSpec::gaussian(16), 3.0, &saa_opts, 7).unwrap();
    g.bench_function("saa_p3_n16", |b| b.iter(|| zp_norm(&saa, black_box(&s), &saa_opts).unwrap()));
    g.finish();
}

fn c2k_exact(c: &mut Criterion) {
    c.bench_function("c2k_n10_k10", |b| b.iter(|| c2k(black_box(10), black_box(10)).unwrap()));
}

fn greedy_net(c: &mut Criterion) {
    let cube = Cube { n: 8, half_side: 1.0 };
    let cloud = Cloud::new(&cube, 30_000, 7).unwrap();
    let mut g = c.benchmark_group("greedy_net");
    g.sample_size(10);
    for eps in [2.0, 1.0] {
        g.bench_with_input(BenchmarkId::new("cube8_30k", eps), &eps, |b, &eps| b.iter(|| cloud.greedy_net(eps)));
    }
    g.finish();
}

criterion_group!(benches, local_model, zp_solve, c2k_exact, greedy_net);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use scalelab_bench::{claims, fan_out_model, preset, samples};
use scalelab_core::autoscalers::ga::{minimize, GaParams};
use scalelab_core::cluster::allocate_cpu;
use scalelab_core::telemetry::window::p_quantile;
use scalelab_core::{run_scenario, SeededRng};
use std::hint::black_box;

fn allocation(c: &mut Criterion) {
    for n in [6, 40] {
        let cl = claims(n, 1);
        let cap = cl.iter().map(|x| x.cap()).sum::<f64>() * 0.6;
        c.bench_function(&format!("allocate_cpu/{n}_pods"), |b| {
            b.iter(|| allocate_cpu(black_box(cap), black_box(&cl)))
        });
    }
}

fn quantile(c: &mut Criterion) {
    let v = samples(24_000, 2);
    c.bench_function("p90/24k_samples", |b| {
        b.iter(|| p_quantile(black_box(&v), 0.9))
    });
}

fn genetic_search(c: &mut Criterion) {
    let model = fan_out_model();
    let bounds = [(1, 8), (1, 8)];
    c.bench_function("ga/pbscaler_fitness", |b| {
        b.iter_batched(
            || SeededRng::new(3, "bench-ga"),
            |mut rng| {
                minimize(
                    &bounds,
                    &GaParams::default(),
                    Some(&[2, 2]),
                    &mut rng,
                    &mut |x| {
                        let est = model.entry_p90(300.0, &[4, x[0] as u32, x[1] as u32]);
                        10.0 * (est / 150.0 - 1.0).max(0.0) + (x[0] + x[1]) as f64 / 20.0
                    },
                )
            },
            BatchSize::SmallInput,
        )
    });
}

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    let default = preset("sockshop-default.json", 60_000);
    g.bench_function("sockshop_default_60s", |b| {
        b.iter(|| run_scenario(black_box(&default)).unwrap())
    });
    let eval = preset("paper-evaluation.json", 60_000);
    g.bench_function("evaluation_trace_60s_pbscaler", |b| {
        b.iter(|| run_scenario(black_box(&eval)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, allocation, quantile, genetic_search, engine);
criterion_main!(benches);

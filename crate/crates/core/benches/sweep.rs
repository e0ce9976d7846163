use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wearsim::adc::quantize_batch;
use wearsim::exec::Execution;
use wearsim::scenario::RawScenario;
use wearsim::sweep::{self, Vary};

const BASE: &str = include_str!("../../../scenarios/compensation.scn");

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench_sweep(c: &mut Criterion) {
    let mut raw = RawScenario::parse(BASE).unwrap();
    raw.set("duration_ticks", "20000").unwrap();
    let varies: Vec<Vary> = vec![
        "wear.rate=0.02,0.05,0.08,0.11".parse().unwrap(),
        "brake.release_delay_ticks=0,10".parse().unwrap(),
        "detector.source=analog,adc".parse().unwrap(),
    ];
    let scenarios = sweep::expand(&raw, &varies).unwrap();

    let mut group = c.benchmark_group("sweep_16x20k_ticks");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep::run(black_box(&scenarios), exec))
        });
    }
    group.finish();
}

fn bench_quantize(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantize_grid");
    for n in [50_000usize, 1_000_000] {
        let grid: Vec<f64> = (0..n).map(|i| i as f64 * 5.5 / n as f64).collect();
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n), &grid, |b, g| {
                b.iter(|| quantize_batch(black_box(g), exec))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_quantize);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use longlines::finder::{default_params, find_long_line_with, FinderOptions, Knobs, Regime};
use longlines::par;
use longlines::samplers::RandomStream;
use longlines::sets::{cube_shell_calibrated, mc_volume, Calibration};

fn finder(c: &mut Criterion) {
    let n = 256;
    let cal = Calibration::new(1).with_samples(20_000, 20_000);
    let set = cube_shell_calibrated(n, 0.5, &cal).unwrap();
    let scheme = default_params(&Regime::cube(), n, 0.5, &Knobs::default())
        .unwrap()
        .build()
        .unwrap();
    let opts = FinderOptions {
        pilot: 200,
        ..FinderOptions::default()
    };
    let stream = RandomStream::new(7);
    let run = || find_long_line_with(&set, &scheme, 100, 256, &stream, &opts).unwrap();

    let mut g = c.benchmark_group("find_long_line");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", n), |b| b.iter(run));
    g.bench_function(BenchmarkId::new("sequential", n), |b| b.iter(|| par::run_sequential(run)));
    g.finish();
}

fn volume(c: &mut Criterion) {
    let n = 256;
    let cal = Calibration::new(1).with_samples(20_000, 20_000);
    let set = cube_shell_calibrated(n, 0.5, &cal).unwrap();
    let stream = RandomStream::new(9);
    let run = || mc_volume(&set, 50_000, &stream).unwrap();

    let mut g = c.benchmark_group("mc_volume");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", n), |b| b.iter(run));
    g.bench_function(BenchmarkId::new("sequential", n), |b| b.iter(|| par::run_sequential(run)));
    g.finish();
}

criterion_group!(benches, finder, volume);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use vmfilt::design::Family;
use vmfilt::timing::{bench_stage, SIGMAS};
use vmfilt_bench::{textured, SIDE};

fn lowpass(c: &mut Criterion) {
    let img = textured();
    let mut g = c.benchmark_group("lowpass");
    g.sample_size(10);
    g.throughput(Throughput::Elements((SIDE * SIDE) as u64));
    for family in [Family::GaussianFir, Family::RepeatedPole] {
        for sigma in SIGMAS {
            let stage = bench_stage(family, sigma).unwrap();
            g.bench_with_input(BenchmarkId::new(family.name(), sigma), &stage, |b, s| {
                b.iter(|| s.apply_cols(&s.apply_rows(&img).unwrap()).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, lowpass);
criterion_main!(benches);

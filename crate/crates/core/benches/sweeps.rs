use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};

use sessionspan::bench::{load_cases, sweep_seq};

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn sweeps(c: &mut Criterion) {
    let dir = corpus();
    let cases = load_cases(&dir).expect("corpus manifest");
    let mut g = c.benchmark_group("corpus-sweep");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| sweep_seq(&dir, &cases, 1)));
    #[cfg(feature = "parallel")]
    g.bench_function("parallel", |b| {
        b.iter(|| sessionspan::bench::sweep_par(&dir, &cases, 1))
    });
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lrd_core::lrtest::{OrderSpec, RunSettings};
use lrd_core::periodogram::{local_periodogram, LocalMean, SeriesView};
use lrd_core::simulate::{simulate_named_model, NamedModel};
use lrd_core::spectral::{gamma_matrix, QuadratureGrid, SieveParams};
use lrd_core::whittle::{fit_block, ScaleMode};

fn bench_gamma(c: &mut Criterion) {
    let grid = QuadratureGrid::default();
    let mut group = c.benchmark_group("gamma_matrix");
    for k in [0usize, 2, 5] {
        let params = SieveParams::new(0.2, vec![0.1; k]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &params, |b, p| {
            b.iter(|| gamma_matrix(p, &grid).unwrap())
        });
    }
    group.finish();
}

fn bench_periodogram(c: &mut Criterion) {
    let path = simulate_named_model(NamedModel::Tvar1SmoothMean, 1024, 1).unwrap();
    let series = SeriesView::new(&path);
    let mean = LocalMean::new(&series, 256).unwrap();
    c.bench_function("local_periodogram_n256", |b| {
        b.iter(|| local_periodogram(&series, &mean, 256, 2).unwrap())
    });
}

fn bench_fit_block(c: &mut Criterion) {
    let path = simulate_named_model(NamedModel::TvFarima1D0, 1024, 2).unwrap();
    let series = SeriesView::new(&path);
    let mean = LocalMean::new(&series, 256).unwrap();
    let pgram = local_periodogram(&series, &mean, 256, 2).unwrap();
    let mut group = c.benchmark_group("fit_block");
    for k in [0usize, 1, 3] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| fit_block(&pgram, k, ScaleMode::Profiled).unwrap())
        });
    }
    group.finish();
}

fn bench_run_test(c: &mut Criterion) {
    let path = simulate_named_model(NamedModel::Tvar1SmoothMean, 1024, 3).unwrap();
    let mut settings = RunSettings::with_blocks(4);
    settings.order = OrderSpec::Fixed(1);
    c.bench_function("run_test_t1024_m4_k1", |b| {
        b.iter(|| lrd_core::run_test(&path, &settings).unwrap())
    });
}

criterion_group!(
    benches,
    bench_gamma,
    bench_periodogram,
    bench_fit_block,
    bench_run_test
);
criterion_main!(benches);

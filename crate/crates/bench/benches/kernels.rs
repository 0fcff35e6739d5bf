use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use univlab_core::cdma::{self, draw_noise};
use univlab_core::ensembles::sample_standard;
use univlab_core::lasso::{self, LassoProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use univlab_core::replica::{self, QuadratureSpec};
use univlab_core::spectra;
use univlab_core::{sk, EnsembleSpec, Scale};

fn cdma_free_energy(c: &mut Criterion) {
    let mut g = c.benchmark_group("cdma_free_energy");
    for n in [8usize, 12, 16] {
        let a = sample_standard(&EnsembleSpec::gaussian(), n, n, 1).unwrap().with_scale(Scale::SqrtRows).unwrap().scaled();
        let z = draw_noise(n, 1.0, 1, 2).remove(0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| cdma::free_energy(black_box(&a), &z, 1.0).unwrap()));
    }
    g.finish();
}

fn sk_free_entropy(c: &mut Criterion) {
    let mut g = c.benchmark_group("sk_free_entropy");
    for n in [10usize, 14, 18] {
        let a = sample_standard(&EnsembleSpec::gaussian(), n, n, 3).unwrap().with_scale(Scale::SqrtCols).unwrap().scaled();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| sk::free_entropy_matrix(black_box(&a), 1.0).unwrap()));
    }
    g.finish();
}

fn lasso_solve(c: &mut Criterion) {
    let (m, n) = (100, 200);
    let a = sample_standard(&EnsembleSpec::gaussian(), m, n, 4).unwrap().with_scale(Scale::SqrtRows).unwrap();
    let x0 = lasso::sparse_signal(n, 0.2, 2.0, 5).unwrap();
    let p = LassoProblem::with_noise(&a, x0, 1.0, 0.5, 2.0, 6).unwrap();
    c.bench_function("lasso_solve_200", |b| b.iter(|| lasso::solve_box_lasso(black_box(&p), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()));
}

fn gram_eigenvalues(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram_spectrum");
    g.sample_size(10);
    for n in [100usize, 300] {
        let a = sample_standard(&EnsembleSpec::gaussian(), 2 * n, n, 7).unwrap().raw();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| spectra::gram_spectrum(black_box(&a), 1.0 / n as f64).unwrap()));
    }
    g.finish();
}

fn replica_minimize(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    c.bench_function("replica_minimize_crs", |b| {
        b.iter(|| replica::minimize_crs(black_box(1.0), 1.0, replica::DEFAULT_GRID, replica::DEFAULT_REFINE_TOL, &quad).unwrap())
    });
}

criterion_group!(benches, cdma_free_energy, sk_free_entropy, lasso_solve, gram_eigenvalues, replica_minimize);
criterion_main!(benches);

use std::hint::black_box;

use cheeger_bench::{eigen_fixture, grid};
use cheeger_core::{
    decompose, first_eigenpair, h1_exact, hk_bruteforce, spectrum_p2, sweep, Exponent, PerimeterMode, DEFAULT_BUDGET,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODE: PerimeterMode = PerimeterMode::Dirichlet;

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("first_eigenpair");
    group.sample_size(10);
    for (name, res) in [("unit_interval", 1024), ("unit_square", 32)] {
        let g = grid(name, res);
        for p in [2.0, 1.5] {
            let e = Exponent::new(p).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{name}/p{p}"), res), &g, |b, g| {
                b.iter(|| first_eigenpair(g, e, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap())
            });
        }
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let g = grid("unit_square", 32);
    c.bench_function("spectrum_p2/unit_square/32/m8", |b| b.iter(|| spectrum_p2(&g, black_box(8)).unwrap()));
}

fn sweep_cut(c: &mut Criterion) {
    let (g, e) = eigen_fixture("unit_square", 64, 2.0);
    c.bench_function("sweep/unit_square/64", |b| b.iter(|| sweep(&g, &e.field, 2.0, MODE).unwrap()));
}

fn decomposition(c: &mut Criterion) {
    let (g, e) = eigen_fixture("unit_interval", 1024, 2.0);
    let p = Exponent::new(2.0).unwrap();
    let mut group = c.benchmark_group("decompose/unit_interval/1024");
    for k in [1, 2, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| decompose(&g, &e.field, p, k).unwrap())
        });
    }
    group.finish();
}

fn exact_cheeger(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    group.sample_size(10);
    let small = grid("l_shape", 2);
    group.bench_function("hk_bruteforce/l_shape/2/k2", |b| {
        b.iter(|| hk_bruteforce(&small, 2, MODE, DEFAULT_BUDGET).unwrap())
    });
    for res in [16, 64] {
        let g = grid("l_shape", res);
        group.bench_with_input(BenchmarkId::new("h1_exact/l_shape", res), &g, |b, g| {
            b.iter(|| h1_exact(g, MODE).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eigensolver, spectrum, sweep_cut, decomposition, exact_cheeger);
criterion_main!(benches);

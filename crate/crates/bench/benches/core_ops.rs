//! Benchmarks for the hot paths: enumeration, spectral setup, series
//! walks, operator assembly, and the eigen solve behind the spectral
//! report.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use kgs_bench::{rank_one_doubling, rank_two_single_vertex, rank_two_two_vertices};
use kgs_core::dirac::{dirac_eigen_report, AlphaSequence};
use kgs_core::harmonic::{laplacian_apply, wavelet_basis, StepFunction};
use kgs_core::zeta::zeta_eval;
use kgs_core::{enumerate_paths, WeightContext};

fn bench_enumeration(c: &mut Criterion) {
    let g = rank_two_single_vertex();
    c.bench_function("enumerate_paths depth 6 (1296 paths)", |b| {
        b.iter(|| enumerate_paths(black_box(&g), 6, None).unwrap())
    });
}

fn bench_spectral_setup(c: &mut Criterion) {
    let g = rank_two_two_vertices();
    c.bench_function("weight context (power iteration + Cesaro)", |b| {
        b.iter(|| WeightContext::new(black_box(&g), 0.5).unwrap())
    });
}

fn bench_zeta_walk(c: &mut Criterion) {
    let g = rank_two_single_vertex();
    let ctx = WeightContext::new(&g, 0.5).unwrap();
    c.bench_function("zeta level walk to depth 200", |b| {
        b.iter(|| zeta_eval(black_box(&ctx), 0.8, 200).unwrap())
    });
}

fn bench_laplacian_apply(c: &mut Criterion) {
    let g = rank_two_single_vertex();
    let ctx = WeightContext::new(&g, 0.5).unwrap();
    let f = {
        let n = enumerate_paths(&g, 6, None).unwrap().len();
        let coeffs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        StepFunction::from_depth_coeffs(&ctx, 3, coeffs).unwrap()
    };
    c.bench_function("laplacian apply at depth 3 (1296 cells)", |b| {
        b.iter(|| laplacian_apply(black_box(&ctx), 2.0, black_box(&f)).unwrap())
    });
}

fn bench_wavelet_basis(c: &mut Criterion) {
    let g = rank_two_single_vertex();
    let ctx = WeightContext::new(&g, 0.5).unwrap();
    c.bench_function("wavelet layer basis W1 (30 vectors)", |b| {
        b.iter(|| wavelet_basis(black_box(&ctx), 1).unwrap())
    });
}

fn bench_dirac_eigen(c: &mut Criterion) {
    let g = rank_one_doubling();
    let ctx = WeightContext::new(&g, 0.5).unwrap();
    let alpha = AlphaSequence::linear(1.0);
    c.bench_function("dirac eigen report at depth 6 (64 cells)", |b| {
        b.iter(|| dirac_eigen_report(black_box(&ctx), &alpha, 6).unwrap())
    });
}

criterion_group!(
    benches,
    bench_enumeration,
    bench_spectral_setup,
    bench_zeta_walk,
    bench_laplacian_apply,
    bench_wavelet_basis,
    bench_dirac_eigen
);
criterion_main!(benches);

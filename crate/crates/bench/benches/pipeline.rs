use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use oamux_core::{
    duplex, fidelity, incoherent_mix, make_superposition, pure_density, render_state, run_tomography, BasisSpec,
    DensityMatrix, Exposure, GridSpec, ImperfectionModel,
};
use std::hint::black_box;

fn sources() -> (DensityMatrix, DensityMatrix) {
    let basis = BasisSpec::new([-4, -2, 1, 3]).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let a = make_superposition(&[(-4, one), (-2, one)]).unwrap();
    let b = make_superposition(&[
        (1, Complex64::new(0.5, 0.0)),
        (3, Complex64::new(3f64.sqrt() / 2.0, 0.0)),
    ])
    .unwrap();
    (pure_density(&a, &basis).unwrap(), pure_density(&b, &basis).unwrap())
}

fn bench_duplex(c: &mut Criterion) {
    let (a, b) = sources();
    let imp = ImperfectionModel::new(0.6666, 0.01, 0.02).unwrap();
    c.bench_function("duplex/4x4", |bench| {
        bench.iter(|| duplex(Some(black_box(&a)), Some(black_box(&b)), (0.5, 0.5), &imp).unwrap())
    });
}

fn bench_tomography(c: &mut Criterion) {
    let (a, b) = sources();
    let rho = incoherent_mix(&[(0.5, &a), (0.5, &b)]).unwrap();
    let mut group = c.benchmark_group("tomography");
    group.bench_function("exact", |bench| {
        bench.iter(|| run_tomography(black_box(&rho), Exposure::Infinite, 0, &rho).unwrap())
    });
    group.bench_function("sampled_1e5", |bench| {
        bench.iter(|| run_tomography(black_box(&rho), Exposure::Finite(1e5), 7, &rho).unwrap())
    });
    group.finish();
}

fn bench_fidelity(c: &mut Criterion) {
    let (a, b) = sources();
    let mix = incoherent_mix(&[(0.3, &a), (0.7, &b)]).unwrap();
    c.bench_function("fidelity/4x4", |bench| {
        bench.iter(|| fidelity(black_box(&mix), black_box(&a)).unwrap())
    });
}

fn bench_render(c: &mut Criterion) {
    let (a, b) = sources();
    let rho = incoherent_mix(&[(0.5, &a), (0.5, &b)]).unwrap();
    let mut group = c.benchmark_group("render_state");
    group.sample_size(20);
    for n in [128usize, 512] {
        let grid = GridSpec::new(n, 8.0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |bench, grid| {
            bench.iter(|| render_state(black_box(&rho), grid))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_duplex, bench_tomography, bench_fidelity, bench_render);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use zakharov::diagnostics::{hamiltonian, SeriesLayout};
use zakharov::evolve::Stepper;
use zakharov::profiles::find_profile_3d;
use zakharov::spectral::sobolev_norm;
use zakharov::GridKind;
use zakharov_bench::{periodic_state, radial_state};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for points in [1000, 4000, 16000] {
        let state = radial_state(2, points);
        let stepper = Stepper::new(state.grid().clone());
        group.bench_with_input(BenchmarkId::new("radial-2d", points), &points, |b, _| {
            let mut s = state.clone();
            b.iter(|| stepper.advance(black_box(&mut s), 1e-4))
        });
    }
    for points in [64, 128, 256] {
        let state = periodic_state(2, points);
        let stepper = Stepper::new(state.grid().clone());
        group.bench_with_input(BenchmarkId::new("periodic-2d", points), &points, |b, _| {
            let mut s = state.clone();
            b.iter(|| stepper.advance(black_box(&mut s), 1e-3))
        });
    }
    group.finish();
}

fn norms(c: &mut Criterion) {
    let radial = radial_state(3, 4000);
    let periodic = periodic_state(2, 128);
    c.bench_function("sobolev radial-3d H^0.5", |b| {
        b.iter(|| sobolev_norm(black_box(&radial.psi), 0.5).unwrap())
    });
    c.bench_function("sobolev periodic-2d H^0.5", |b| {
        b.iter(|| sobolev_norm(black_box(&periodic.psi), 0.5).unwrap())
    });
    c.bench_function("hamiltonian radial-3d", |b| b.iter(|| hamiltonian(black_box(&radial)).unwrap()));
    let layout = SeriesLayout {
        kind: GridKind::Radial,
        dim: 3,
        ell: vec![0.0, 1.0],
        variance: true,
        modified_variance: vec![(4.0, 4.0), (16.0, 16.0)],
    };
    c.bench_function("series sample radial-3d", |b| b.iter(|| layout.sample(black_box(&radial)).unwrap()));
}

fn profiles(c: &mut Criterion) {
    let mut group = c.benchmark_group("profile");
    group.sample_size(10);
    for k in [1, 4] {
        group.bench_with_input(BenchmarkId::new("ladder3d", k), &k, |b, &k| {
            b.iter(|| find_profile_3d(k, 1e-10).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, step, norms, profiles);
criterion_main!(benches);

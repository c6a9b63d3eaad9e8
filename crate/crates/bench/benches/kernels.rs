//! Hot kernels: Legendre transform, h evaluation, MGF fixed point, MC.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use perptail_bench::reference_law;
use perptail_core::hfun::h_eval;
use perptail_core::tails::{mc_sample, mgf_solve};
use perptail_core::{Dependence, Grid, GridFunction};

fn legendre(c: &mut Criterion) {
    let g = Grid::geometric(1e-3, 1e4, 64).unwrap();
    let f = GridFunction::from_fn(&g, |x| x.powf(4.0 / 3.0)).unwrap();
    let zg = Grid::geometric(1e-2, 20.0, 64).unwrap();
    c.bench_function("legendre x^(4/3)", |b| {
        b.iter(|| f.legendre(black_box(&zg)).unwrap())
    });
}

fn h(c: &mut Criterion) {
    for dep in [
        Dependence::Independent,
        Dependence::Fgm { theta: 0.5 },
        Dependence::Comonotone,
    ] {
        let j = reference_law(dep);
        c.bench_function(&format!("h_eval {dep:?} x=100"), |b| {
            b.iter(|| h_eval(&j, black_box(100.0)).unwrap())
        });
    }
}

fn mgf(c: &mut Criterion) {
    let j = reference_law(Dependence::Independent);
    let zg = Grid::geometric(1e-3, 30.0, 16).unwrap();
    let mut group = c.benchmark_group("mgf");
    group.sample_size(10);
    group.bench_function("marching 1e-3..30 @16", |b| {
        b.iter(|| mgf_solve(&j, black_box(&zg), 1e-9, 500).unwrap())
    });
    group.finish();
}

fn mc(c: &mut Criterion) {
    let j = reference_law(Dependence::Comonotone);
    let mut group = c.benchmark_group("mc");
    group.sample_size(10);
    group.bench_function("1e4 paths horizon 60", |b| {
        b.iter(|| mc_sample(&j, 10_000, 60, black_box(1)))
    });
    group.finish();
}

criterion_group!(benches, legendre, h, mgf, mc);
criterion_main!(benches);

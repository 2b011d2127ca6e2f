use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use solvdyn::linalg::{commutant_generator, Unimodular};
use solvdyn::numdyn::{graph_transform, lyapunov_exponents, GridSpec, SectionKind};
use solvdyn::sol::CoverPoint;
use solvdyn_bench::cat_map;

fn commutant(c: &mut Criterion) {
    let a = Unimodular::from_i64([[233, 144], [144, 89]]).unwrap();
    c.bench_function("commutant_generator", |b| b.iter(|| commutant_generator(black_box(&a)).unwrap()));
}

fn lyapunov(c: &mut Criterion) {
    let f = cat_map(0.05);
    c.bench_function("lyapunov_1000", |b| {
        b.iter(|| lyapunov_exponents(&f, CoverPoint::new([0.1, 0.2], 0.3), black_box(1000)).unwrap())
    });
}

fn graph(c: &mut Criterion) {
    let f = cat_map(0.05);
    let mut g = c.benchmark_group("graph_transform");
    g.sample_size(10);
    g.bench_function("cs_16x4", |b| {
        b.iter(|| graph_transform(&f, SectionKind::Cs, GridSpec { nv: 16, nt: 4 }, 1e-8, 200).unwrap())
    });
    g.finish();
}

criterion_group!(benches, commutant, lyapunov, graph);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fdcg::cutmesh::classify;
use fdcg::fem::{Discretization, FeSpace, FormParams, FormWeights};
use fdcg::problems::deforming_disk;
use fdcg::stepper::{initialize, RunConfig};
use fdcg::{Grid, MarkerCurve, Vec2};
use std::hint::black_box;
use std::sync::Arc;

fn spline(c: &mut Criterion) {
    let mut group = c.benchmark_group("spline_build");
    for n in [256usize, 1024, 4096] {
        let markers: Vec<Vec2> = MarkerCurve::circle(Vec2::ZERO, 1.0, n).unwrap().markers().to_vec();
        let eta = 2.0 * std::f64::consts::PI / n as f64;
        group.bench_with_input(BenchmarkId::from_parameter(n), &markers, |b, m| {
            b.iter(|| MarkerCurve::new(black_box(m.clone()), eta).unwrap())
        });
    }
    group.finish();
}

fn classify_circle(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify");
    for inv in [32.0, 64.0] {
        let h = 1.0 / inv;
        let grid = Grid::square(Vec2::new(-1.5, -1.5), 3.0, h).unwrap();
        let curve = MarkerCurve::circle(Vec2::new(0.01, -0.02), 1.0, (4.0 * std::f64::consts::PI / h) as usize).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(inv), &curve, |b, curve| b.iter(|| classify(&grid, black_box(curve)).unwrap()));
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_system");
    group.sample_size(20);
    for k in [2usize, 3, 4] {
        let h = 1.0 / 32.0;
        let grid = Grid::square(Vec2::new(-1.5, -1.5), 3.0, h).unwrap();
        let curve = MarkerCurve::circle(Vec2::new(0.01, -0.02), 1.0, 402).unwrap();
        let topo = classify(&grid, &curve).unwrap();
        let space = Arc::new(FeSpace::new(grid, k).unwrap());
        let disc = Discretization::new(space, topo, curve, FormParams::for_degree(k)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &disc, |b, d| b.iter(|| d.assemble(FormWeights::system(black_box(32.0)))));
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("bdf_step");
    group.sample_size(10);
    let p = deforming_disk();
    for k in [2usize, 3] {
        let cfg = RunConfig::new(k, 1.0 / 16.0, 1.0 / 16.0);
        group.bench_function(BenchmarkId::from_parameter(k), |b| {
            b.iter_batched(|| initialize(&p, &cfg).unwrap(), |mut s| s.advance().unwrap(), criterion::BatchSize::LargeInput)
        });
    }
    group.finish();
}

criterion_group!(benches, spline, classify_circle, assembly, time_step);
criterion_main!(benches);

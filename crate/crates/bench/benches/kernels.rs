use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use kcontact::models::{membrane, string};
use kcontact::sim::{self, step};
use kcontact::{evaluate_jet, Boundary, Grid, InitialCondition, PhasePoint, Poly2, StringParams};

fn jets(c: &mut Criterion) {
    let m = membrane(1.3, 0.2);
    let z = PhasePoint::new(vec![0.4], vec![0.7, -0.4, 1.1], vec![0.1, 0.2, -0.3]);
    c.bench_function("evaluate_jet/membrane", |b| {
        b.iter(|| evaluate_jet(&m, black_box(&z)).unwrap())
    });

    let s = string(StringParams::symmetric_gauge(1.0, 1.0, 0.5, 0.2, 1.0, Poly2::zero()));
    let z = PhasePoint::new(vec![0.3, -0.2], vec![0.5, 0.1, -0.7, 0.2], vec![0.05, -0.1]);
    c.bench_function("evaluate_jet/string", |b| {
        b.iter(|| evaluate_jet(&s, black_box(&z)).unwrap())
    });
}

fn rk4(c: &mut Criterion) {
    let m = membrane(1.0, 0.2);
    let grid = Grid::uniform(2, 0.0, PI, 101, Boundary::Dirichlet).unwrap();
    let init = [InitialCondition::Mode {
        field: 0,
        amplitude: 1.0,
        velocity: 0.0,
        wavenumbers: vec![1.0, 1.0],
    }];
    let state = InitialCondition::superpose(1, &grid, &init).unwrap();
    let dt = 0.4 * PI / 100.0;
    let mut g = c.benchmark_group("sim");
    g.sample_size(20);
    g.bench_function("rk4_step/membrane_101x101", |b| {
        b.iter(|| step(&m, black_box(&state), &grid, dt).unwrap())
    });
    g.bench_function("run/membrane_101x101_10_steps", |b| {
        b.iter(|| sim::run(&m, &grid, dt, 10.0 * dt, black_box(&state), 10).unwrap())
    });
    g.finish();
}

criterion_group!(benches, jets, rk4);
criterion_main!(benches);

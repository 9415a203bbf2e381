use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sigmaflow_core::flow::{evolve, initial_state, residual, Initial};
use sigmaflow_core::gpoly::g_mnk;
use sigmaflow_core::obstacle::{default_omega, solve_psor, ObstacleProblem};
use sigmaflow_core::phase::{phase_diagram_pn, phase_diagram_xmn};
use sigmaflow_core::{FlowProblem, FluxFunction, PnProblem, SchemeConfig};

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual");
    for &(n, k) in &[(2, 1), (3, 2), (4, 3)] {
        let fp = FlowProblem::new(PnProblem::new(n, k, 1.5, 2.0).unwrap(), FluxFunction::NegIdentity).unwrap();
        let grid = fp.grid(400).unwrap();
        let state = initial_state(&fp, &grid, &Initial::Chord).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}k{k}")), &state, |b, s| {
            b.iter(|| residual(&fp, black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn short_evolve(c: &mut Criterion) {
    let fp = FlowProblem::new(PnProblem::new(2, 1, 1.5, 2.0).unwrap(), FluxFunction::NegIdentity).unwrap();
    let grid = fp.grid(101).unwrap();
    let scheme = SchemeConfig { max_steps: Some(2000), ..SchemeConfig::default() };
    c.bench_function("evolve_2000_steps", |b| b.iter(|| evolve(&fp, &grid, &scheme, &Initial::Chord).unwrap()));
}

fn psor(c: &mut Criterion) {
    let problem = ObstacleProblem::new(2, 1, 1.2, 2.0).unwrap();
    let x = problem.grid(201).unwrap();
    let omega = default_omega(x.len());
    c.bench_function("psor_201", |b| b.iter(|| solve_psor(&problem, &x, omega, 1e-10).unwrap()));
}

fn exact_algebra(c: &mut Criterion) {
    let mut group = c.benchmark_group("g_mnk");
    for &(m, n, k) in &[(0, 2, 1), (1, 2, 2), (2, 3, 3)] {
        group.bench_function(format!("m{m}n{n}k{k}"), |b| b.iter(|| g_mnk(black_box(m), n, k).unwrap()));
    }
    group.finish();
}

fn phase(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase");
    group.sample_size(10);
    group.bench_function("pn_10x10", |b| {
        b.iter(|| phase_diagram_pn(2, 1, (1.05, 3.0), (1.05, 3.0), (10, 10)).unwrap())
    });
    group.bench_function("xmn_20x20", |b| {
        b.iter(|| phase_diagram_xmn(0, 1, 1, (0.05, 1.5), (1.5, 3.0), (20, 20)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, rhs, short_evolve, psor, exact_algebra, phase);
criterion_main!(benches);

use std::f64::consts::TAU;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ionspin::coupling::{forward_coupling, response_tensor};
use ionspin::crystal::solve_trap;
use ionspin::dynamics::ground_state;
use ionspin::graphs;
use ionspin::inverse::{solve_rabi, SolveConfig, SolveMode};
use ionspin::TrapConfig;
use ionspin_bench::{dense_coupling, dense_omega, fixture};

fn modes(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_trap");
    for n in [10, 25, 40] {
        let trap = TrapConfig::with_default_anisotropy(n, TAU * 5e6).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &trap, |b, t| b.iter(|| solve_trap(t).unwrap()));
    }
    g.finish();
}

fn forward(c: &mut Criterion) {
    let mut g = c.benchmark_group("response_and_forward");
    for n in [10, 25, 36] {
        let fx = fixture(n, 0.1);
        let om = dense_omega(n);
        g.bench_with_input(BenchmarkId::new("response_tensor", n), &fx, |b, fx| {
            b.iter(|| response_tensor(&fx.modes, &fx.sched).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("forward_coupling", n), &fx, |b, fx| {
            b.iter(|| forward_coupling(&om, &fx.f).unwrap())
        });
    }
    g.finish();
}

fn inverse(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_rabi");
    g.sample_size(10);
    for n in [6, 10] {
        let fx = fixture(n, 0.1);
        let target = graphs::chain_nn(n, 1.0, false).unwrap();
        let cfg = SolveConfig {
            n_starts: 1,
            mode: SolveMode::FixedBudget { budget: TAU * 1e6 },
            ..SolveConfig::default()
        };
        g.bench_with_input(BenchmarkId::new("chain", n), &fx, |b, fx| {
            b.iter(|| solve_rabi(&target, &fx.f, &cfg).unwrap())
        });
    }
    g.finish();
}

fn ground(c: &mut Criterion) {
    let mut g = c.benchmark_group("ground_state");
    g.sample_size(10);
    for n in [12, 16, 20] {
        let j = dense_coupling(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &j, |b, j| b.iter(|| ground_state(j).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, modes, forward, inverse, ground);
criterion_main!(benches);

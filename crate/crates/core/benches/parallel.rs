//! Sequential against data-parallel execution for the two hot loops: the
//! per-node saddle solves inside the PDE sweep and the Monte Carlo paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robust_forward::consumption_ode::{solve_g, GParams};
use robust_forward::model_config::presets;
use robust_forward::opportunity_pde::{solve_pde, PdeOptions};
use robust_forward::par::Execution;
use robust_forward::simulator::{simulate, SimConfig};

const MODES: [(&str, Execution); 2] = [("seq", Execution::Sequential), ("par", Execution::Parallel)];

fn pde(c: &mut Criterion) {
    let spec = presets::ou();
    let mut g = c.benchmark_group("solve_pde_ou_201");
    g.sample_size(10);
    for (name, execution) in MODES {
        let opts = PdeOptions {
            execution,
            ..PdeOptions::with_grid(201, 1e-10)
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, o| {
            b.iter(|| solve_pde(&spec, o).unwrap())
        });
    }
    g.finish();
}

fn paths(c: &mut Criterion) {
    let spec = presets::ou();
    let sol = solve_pde(&spec, &PdeOptions::with_grid(101, 1e-10)).unwrap();
    let y0 = sol.y_at(0.0);
    let curve = solve_g(|_| y0, &GParams::from(&spec), 1.0, 1e-3).unwrap();
    let mut g = c.benchmark_group("simulate_ou_2000_paths");
    g.sample_size(10);
    for (name, execution) in MODES {
        let sim = SimConfig {
            n_paths: 2_000,
            dt: 1e-2,
            execution,
            ..SimConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &sim, |b, s| {
            b.iter(|| simulate(&spec, &sol, &curve, s).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, pde, paths);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use levy_saddle::game::verify_pair;
use levy_saddle::mc_oracle::{simulate_cost, SimConfig};
use levy_saddle::presets::{default_costs, reference_model};
use levy_saddle::sweep::{run_sweep, SweepParam, SweepSpec};
use levy_saddle::verifier::VerifyOptions;
use levy_saddle::{Equilibrium, Execution, GameConfig, Side};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn monte_carlo(c: &mut Criterion) {
    let m = reference_model(Side::SpectrallyNegative, 1.0).unwrap();
    let e = Equilibrium::solve(&m, default_costs()).unwrap();
    let x = 0.5 * (e.a_star() + e.b_star());
    let mut group = c.benchmark_group("simulate_cost_4096_paths");
    group.sample_size(10);
    for exec in MODES {
        let cfg = SimConfig { n_paths: 4096, exec, ..SimConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |bch, cfg| {
            bch.iter(|| simulate_cost(&m, &default_costs(), e.a_star(), e.b_star(), black_box(x), cfg).unwrap())
        });
    }
    group.finish();
}

fn verifier(c: &mut Criterion) {
    let m = reference_model(Side::SpectrallyPositive, 1.0).unwrap();
    let e = Equilibrium::solve(&m, default_costs()).unwrap();
    let mut group = c.benchmark_group("verify_pair");
    group.sample_size(10);
    for exec in MODES {
        let opts = VerifyOptions { exec, ..VerifyOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |bch, opts| {
            bch.iter(|| verify_pair(&m, default_costs(), black_box(e.a_star()), e.b_star(), opts).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let base = GameConfig::reference(Side::SpectrallyNegative, 1.0);
    let spec = SweepSpec { parameter: SweepParam::BetaH, values: vec![-2.0, 0.0, 2.0, 4.0], x_grid: None };
    let mut group = c.benchmark_group("beta_sweep");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |bch, &exec| {
            bch.iter(|| run_sweep(black_box(&base), &spec, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, verifier, sweep);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mmcov_core::analysis::CoverageModel;
use mmcov_core::interference::{Mode, TableResolution};
use mmcov_core::montecarlo::{estimate_coverage_curve, SimOptions};
use mmcov_core::{NetworkConfig, Parallelism};

const POLICIES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Rayon)];

fn monte_carlo(c: &mut Criterion) {
    let cfg = NetworkConfig::table_one();
    let betas = [1.0, 3.0, 10.0, 30.0];
    let mut group = c.benchmark_group("monte_carlo_2000_trials");
    group.sample_size(10);
    for (name, par) in POLICIES {
        let opts = SimOptions {
            par,
            block: 128,
            ..SimOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| estimate_coverage_curve(&cfg, 20.0, black_box(&betas), 2000, 1, opts).unwrap())
        });
    }
    group.finish();
}

fn analytic_profile(c: &mut Criterion) {
    let cfg = NetworkConfig::table_one();
    let mut group = c.benchmark_group("coverage_profile");
    group.sample_size(10);
    for (name, par) in POLICIES {
        let model = CoverageModel::build(&cfg, TableResolution::default(), par).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| model.profile(black_box(20.0), Mode::Exact).unwrap())
        });
    }
    group.finish();
}

fn interference_tables(c: &mut Criterion) {
    let cfg = NetworkConfig::table_one();
    let mut group = c.benchmark_group("interference_tables");
    group.sample_size(10);
    for (name, par) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| CoverageModel::build(black_box(&cfg), TableResolution::default(), par).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, analytic_profile, interference_tables);
criterion_main!(benches);

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mad_core::harness::{build_test_set_1, evaluate, OracleConfig};
use mad_core::neural::{Arch, ArchConfig};
use mad_core::sampling::{generate_dataset, GenOptions};
use mad_core::*;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn generation(c: &mut Criterion) {
    let d = Domain::build(DomainKind::UnitSquare, GridSpec::new(21, 80)).unwrap();
    let opts = GenOptions::default();
    let mut group = c.benchmark_group("mad1_generation_200");
    for eq in [EquationSpec::laplace(), EquationSpec::helmholtz(100.0).unwrap()] {
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, format!("{}-k{}", eq.family(), eq.k)), &exec, |b, &exec| {
                b.iter(|| generate_dataset(Generator::Mad1, &eq, &d, 200, 7, &opts, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let d = Domain::build(DomainKind::UnitSquare, GridSpec::new(21, 80)).unwrap();
    let eq = EquationSpec::laplace();
    let test = build_test_set_1(Generator::Mad1, &eq, &d, 200, 7, &GenOptions::default(), Execution::Parallel).unwrap();
    let model = ArchConfig::new(Arch::Baseline, 2, 80, d.node_count()).build(0).unwrap();
    let mut group = c.benchmark_group("evaluate_200");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| evaluate(&model, &test, &d, exec).unwrap()));
    }
    group.finish();
}

fn fd_solves(c: &mut Criterion) {
    let d = Domain::build(DomainKind::UnitSquare, GridSpec::new(11, 40)).unwrap();
    let eq = EquationSpec::helmholtz(10.0).unwrap();
    let oracle = OracleConfig { h: 0.02, ..OracleConfig::default() };
    let opts = GenOptions::default();
    let mut group = c.benchmark_group("fd_test_set_8");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| mad_core::harness::build_test_set_2(&eq, &d, 8, 3, &oracle, &opts, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(5));
    targets = generation, evaluation, fd_solves
}
criterion_main!(benches);

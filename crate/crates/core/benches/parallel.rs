//! Rayon-backed `exec::map` against the sequential baseline on the two
//! workloads that fan out: QAOA restarts and queue-simulation sweeps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tiered_vqa::cloudsim::{default_fleet, generate_workload, run_sim, Policy, WorkloadConfig};
use tiered_vqa::exec;
use tiered_vqa::qsim::NoiseModel;
use tiered_vqa::vqa::{erdos_renyi, ParameterVector, QaoaMaxCut, VqaProblem};

fn restart_evaluations(c: &mut Criterion) {
    let problem = QaoaMaxCut::new(erdos_renyi(7, 0.5, 0).unwrap(), 3).unwrap();
    let noise = NoiseModel::with_rates(0.002, 0.02, 0.045);
    let points: Vec<ParameterVector> = (0..16)
        .map(|i| ParameterVector((0..6).map(|j| 0.1 * (i * 6 + j) as f64).collect()))
        .collect();
    let eval = |p: ParameterVector| problem.evaluate(&p, &noise).unwrap().expectation;

    let mut group = c.benchmark_group("qaoa_evaluations");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("parallel", points.len()), |b| {
        b.iter(|| exec::map(points.clone(), eval))
    });
    group.bench_function(BenchmarkId::new("sequential", points.len()), |b| {
        b.iter(|| exec::map_sequential(points.clone(), eval))
    });
    group.finish();
}

fn queue_sweep(c: &mut Criterion) {
    let fleet = default_fleet(10, 0);
    let workloads: Vec<_> = (0..8)
        .map(|seed| generate_workload(1000, 0.5, &WorkloadConfig::default(), seed).unwrap())
        .collect();
    let sim = |jobs: &Vec<_>| run_sim(jobs, &fleet, Policy::Tiered, 0).unwrap().throughput;

    let mut group = c.benchmark_group("queue_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("parallel", workloads.len()), |b| {
        b.iter(|| exec::map(workloads.iter().collect(), sim))
    });
    group.bench_function(BenchmarkId::new("sequential", workloads.len()), |b| {
        b.iter(|| exec::map_sequential(workloads.iter().collect(), sim))
    });
    group.finish();
}

criterion_group!(benches, restart_evaluations, queue_sweep);
criterion_main!(benches);

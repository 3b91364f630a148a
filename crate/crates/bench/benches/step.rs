use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use qhm_bench::{constant_set, gradient, increasing_batch_set};
use qhm_core::bounds::{exact_sums_thm1, exact_sums_thm2};
use qhm_core::experiment::{run_trajectory, EvalEvery, Init, TrajectoryConfig};
use qhm_core::schedules::expand;
use qhm_core::{make_sigmoid_sum, sample_batch_grad, BatchSampler, FiniteSumProblem, OptimizerKind, QhmState, StepHyper};

fn qhm_update(c: &mut Criterion) {
    let mut group = c.benchmark_group("qhm_step");
    let h = StepHyper { alpha: 0.1, beta: 0.9, gamma: 0.7, batch: 1 };
    for dim in [100, 10_000, 1_000_000] {
        let g = gradient(dim);
        let mut state = QhmState::new(vec![0.0; dim]);
        group.throughput(Throughput::Elements(dim as u64));
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| state.step(black_box(&g), &h).unwrap())
        });
    }
    group.finish();
}

fn minibatch_gradient(c: &mut Criterion) {
    let p = make_sigmoid_sum(50, 10_000, 1).unwrap();
    let x = vec![0.1; 50];
    let mut out = vec![0.0; 50];
    let mut group = c.benchmark_group("sample_batch_grad");
    for b in [8, 128, 2048] {
        let mut s = BatchSampler::new(0, p.n());
        group.throughput(Throughput::Elements(b as u64));
        group.bench_with_input(BenchmarkId::from_parameter(b), &b, |bench, &b| {
            bench.iter(|| sample_batch_grad(&p, &mut s, black_box(&x), b, &mut out).unwrap())
        });
    }
    group.finish();
}

fn plans_and_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("plan");
    let increasing = increasing_batch_set(8, 30);
    let constant = constant_set(128);
    group.bench_function("expand_increasing_batch_m300", |b| {
        b.iter(|| expand(black_box(&increasing), 50_000, 300).unwrap())
    });
    group.bench_function("expand_constant_batch_m300", |b| b.iter(|| expand(black_box(&constant), 50_000, 300).unwrap()));
    let plan = expand(&constant, 50_000, 300).unwrap();
    group.throughput(Throughput::Elements(plan.total_steps() as u64));
    group.bench_function("exact_sums_thm1", |b| b.iter(|| exact_sums_thm1(black_box(&plan)).unwrap()));
    let plan2 = expand(&constant_set(128), 50_000, 300).unwrap();
    group.bench_function("exact_sums_thm2", |b| b.iter(|| exact_sums_thm2(black_box(&plan2))));
    group.finish();
}

fn short_run(c: &mut Criterion) {
    let p = make_sigmoid_sum(20, 1024, 3).unwrap();
    let plan = expand(&increasing_batch_set(8, 5), p.n(), 20).unwrap();
    let cfg = TrajectoryConfig {
        problem: &p,
        plan: &plan,
        optimizer: OptimizerKind::Qhm,
        init: Init::Random { scale: 1.0 },
        eval: EvalEvery::Epoch,
    };
    c.bench_function("trajectory_sigmoid_20_epochs", |b| b.iter(|| run_trajectory(black_box(&cfg), 0).unwrap()));
}

criterion_group!(benches, qhm_update, minibatch_gradient, plans_and_sums, short_run);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fedpt_bench::{logistic_suite, protocol_hyper, quadratic_suite};
use fedpt_core::local_optim::AdamState;
use fedpt_core::{run_round, AdamHyper, AlgorithmKind, ParamVector, ServerState};

fn bench_adam_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("adam_step");
    for d in [50usize, 1000, 10_000] {
        let g = ParamVector::new((0..d).map(|j| (j as f64 * 0.37).sin()).collect());
        group.bench_with_input(BenchmarkId::from_parameter(d), &g, |b, g| {
            let mut state = AdamState::zeros(g.dim(), AdamHyper::default());
            b.iter(|| black_box(state.step(black_box(g)).expect("step")));
        });
    }
    group.finish();
}

fn bench_logistic_round(c: &mut Criterion) {
    let suite = logistic_suite(0.1);
    let mut group = c.benchmark_group("logistic_round");
    for kind in AlgorithmKind::ALL {
        let hyper = protocol_hyper(kind.default_eta_l());
        group.bench_function(kind.name(), |b| {
            let mut server = ServerState::new(ParamVector::zeros(suite.dimension), suite.num_clients());
            b.iter(|| black_box(run_round(&mut server, &suite, kind, &hyper, 0, 0, None).expect("round")));
        });
    }
    group.finish();
}

fn bench_parallel_round(c: &mut Criterion) {
    let suite = quadratic_suite(100, 200);
    let mut hyper = protocol_hyper(1e-3);
    hyper.participants = 50;
    hyper.trackers = 25;
    let mut group = c.benchmark_group("quadratic_round_s50");
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool");
        group.bench_with_input(BenchmarkId::from_parameter(threads), &pool, |b, pool| {
            let mut server = ServerState::new(ParamVector::zeros(suite.dimension), suite.num_clients());
            b.iter(|| {
                black_box(
                    run_round(&mut server, &suite, AlgorithmKind::FAdamGT, &hyper, 0, 0, Some(pool)).expect("round"),
                )
            });
        });
    }
    group.finish();
}

criterion_group!(
    name = rounds;
    config = Criterion::default().sample_size(30);
    targets = bench_adam_step, bench_logistic_round, bench_parallel_round
);
criterion_main!(rounds);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use madgrad::optimizers::{GradientBound, MadgradState};
use madgrad::problems::L1Median;
use madgrad::runner::run;
use madgrad::theory::{check_lyapunov_trace, TheoryTrace};
use madgrad::{MomentumSchedule, ParamVector, Problem, RunConfig, StepControl, StepSizeSchedule};
use madgrad_benches::{dense_grads, optimizer, sparse_grads, OPTIMIZERS};

fn dense_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_step");
    for dim in [100, 10_000] {
        let grads = dense_grads(dim, 64, 0);
        group.throughput(Throughput::Elements((dim * grads.len()) as u64));
        for kind in OPTIMIZERS {
            group.bench_with_input(BenchmarkId::new(*kind, dim), &dim, |b, &dim| {
                b.iter_batched(
                    || optimizer(kind, dim).unwrap(),
                    |mut opt| {
                        for g in &grads {
                            opt.step(g, &StepControl::constant(1e-3, 0.9)).unwrap();
                        }
                        opt
                    },
                    criterion::BatchSize::SmallInput,
                )
            });
        }
    }
    group.finish();
}

fn sparse_steps(c: &mut Criterion) {
    let dim = 100_000;
    let grads = sparse_grads(dim, 16, 256, 1);
    c.bench_function("madgrad_sparse_step_d100k_nnz16", |b| {
        b.iter_batched(
            || MadgradState::new(ParamVector::zeros(dim), 1e-6).unwrap(),
            |mut st| {
                for g in &grads {
                    st.step(g, 1e-3, 1.0).unwrap();
                }
                st
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

fn lyapunov_trace(c: &mut Criterion) {
    let p = L1Median::random(10, 101, 0.0, 2.0, 0).unwrap();
    c.bench_function("lyapunov_trace_1000_steps", |b| {
        b.iter(|| {
            let st = MadgradState::theoretical(ParamVector::zeros(10), GradientBound::Uniform(1.0))
                .unwrap();
            let t = TheoryTrace::record(
                &p,
                st,
                &StepSizeSchedule::Constant { gamma: 0.01 },
                &MomentumSchedule::theorem(),
                1000,
                0,
            )
            .unwrap();
            black_box(check_lyapunov_trace(&t, &p, p.optimum()).unwrap())
        })
    });
}

fn seeded_run(c: &mut Criterion) {
    let cfg = RunConfig::from_toml(
        r#"
name = "bench"
steps = 2000
seeds = 8
record_every = 100

[problem]
kind = "synthetic-logistic"
dim = 20
samples = 1000
seed = 1

[optimizer]
kind = "madgrad"

[schedule]
kind = "constant"
gamma = 0.01

[momentum]
kind = "constant"
c = 0.1
"#,
    )
    .unwrap();
    c.bench_function("run_logistic_8_seeds", |b| {
        b.iter(|| black_box(run(&cfg).unwrap()))
    });
}

criterion_group!(
    benches,
    dense_steps,
    sparse_steps,
    lyapunov_trace,
    seeded_run
);
criterion_main!(benches);

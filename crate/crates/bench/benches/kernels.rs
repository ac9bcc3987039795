use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use ilarl_core::adversarial::{cost_stream_make, mdpe_finite_run, CostStreamKind, MdpeParams};
use ilarl_core::env::{sample_episode_discounted, Environment, GridWorld, TabularMdp};
use ilarl_core::linalg::bonus;
use ilarl_core::policy::UniformPolicy;
use ilarl_core::{CovStats, FeatVec, Seed, WeightVec};

fn features(n: usize, d: usize) -> Vec<FeatVec> {
    (0..n)
        .map(|i| FeatVec::from_fn(d, |j, _| ((i * 31 + j * 17) % 97) as f64 / 97.0 - 0.5))
        .collect()
}

fn covariance(c: &mut Criterion) {
    let phis = features(1000, 10);
    c.bench_function("cov_build_1000x10", |b| b.iter(|| CovStats::build(10, black_box(&phis).iter()).unwrap()));
    let cov = CovStats::build(10, phis.iter()).unwrap();
    c.bench_function("bonus_1000x10", |b| {
        b.iter(|| phis.iter().map(|p| bonus(p, &cov, 1.0).unwrap()).sum::<f64>())
    });
    c.bench_function("cov_push_10", |b| {
        b.iter_batched(|| cov.clone(), |mut cov| cov.push(&phis[0]).unwrap(), BatchSize::SmallInput)
    });
}

fn rollouts(c: &mut Criterion) {
    let env = GridWorld::new(0.1, 200.0).unwrap();
    let policy = UniformPolicy::new(env.num_actions());
    let mut rng = Seed(0).stream("bench");
    c.bench_function("gridworld_episode_gamma_0.95", |b| {
        b.iter(|| sample_episode_discounted(&env, &policy, 0.95, 200, &mut rng).len())
    });
}

fn tabular(c: &mut Criterion) {
    let mdp = TabularMdp::random(12, 4, 3, &mut Seed(0).stream("mdp"));
    let table = vec![vec![0.25; 4]; 12];
    let cost = mdp.costs_from_weights(&WeightVec::from_fn(48, |i, _| (i as f64 / 48.0) - 0.5));
    c.bench_function("exact_value_12x4", |b| b.iter(|| mdp.exact_value(black_box(&table), &cost, 0.9).unwrap()));
    let stream = cost_stream_make(
        &CostStreamKind::RandomWalk {
            start: WeightVec::zeros(48),
            step: 0.1,
        },
        48,
        50,
        5,
        Seed(1),
    )
    .unwrap();
    let params = MdpeParams {
        rounds: 50,
        tau: 10,
        beta: 7.5,
        eta: 0.1,
    };
    let mut group = c.benchmark_group("mdpe");
    group.sample_size(10);
    group.bench_function("finite_12x4_h5_k50", |b| {
        b.iter(|| mdpe_finite_run(&mdp, &stream, params, 5, &mut Seed(2).stream("run")).unwrap().rounds())
    });
    group.finish();
}

criterion_group!(benches, covariance, rollouts, tabular);
criterion_main!(benches);

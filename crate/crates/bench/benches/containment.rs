use std::hint::black_box;

use contain_core::engine::{run, step, Configuration, RunOptions, TraceLevel};
use contain_core::experiments::{run_trials, star_instance, TrialOptions};
use contain_core::faults::{legitimate_config, ColorValue, FaultScenario, StatePatch};
use contain_core::graph::{generate, GraphSpec};
use contain_core::markov::{memory_chain, message_chain, solve_absorbing};
use contain_core::{Acol, SeedTree};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine");
    for n in [256usize, 1024] {
        let g = generate(&GraphSpec::Gnp { n, p: 8.0 / n as f64, seed: 1 }).unwrap();
        let states = legitimate_config(&g, &Acol, 2, 10_000).unwrap();
        let cfg = Configuration::new(states);
        group.bench_with_input(BenchmarkId::new("silent_step", n), &n, |b, _| {
            b.iter(|| step(&g, black_box(&cfg), &Acol, None, &SeedTree::new(3), TraceLevel::Changes).unwrap())
        });

        let mut rng = SeedTree::new(4).rng();
        let random: Vec<_> = (0..n).map(|v| contain_core::Protocol::random_state(&Acol, &g, v, &mut rng)).collect();
        group.bench_with_input(BenchmarkId::new("stabilize", n), &n, |b, _| {
            b.iter(|| {
                run(&g, Configuration::new(random.clone()), &Acol, None, &SeedTree::new(5), &RunOptions::default())
                    .unwrap()
                    .rounds_to_legitimate
            })
        });
    }
    group.finish();
}

fn chains(c: &mut Criterion) {
    let mut group = c.benchmark_group("markov");
    let memory = memory_chain(200).unwrap();
    group.bench_function("memory_chain_200", |b| b.iter(|| solve_absorbing(black_box(&memory)).unwrap()));
    let message = message_chain(100).unwrap();
    group.bench_function("message_chain_100", |b| b.iter(|| solve_absorbing(black_box(&message)).unwrap()));
    group.finish();
}

fn trials(c: &mut Criterion) {
    let (g, states) = star_instance(10).unwrap();
    let scenario = FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), true));
    let opts = TrialOptions::default();
    c.bench_function("star10_broadcast_1000_trials", |b| {
        b.iter(|| run_trials(&g, &Acol, &states, &scenario, 1000, 7, &opts).unwrap().rounds_to_legal.mean)
    });
}

criterion_group!(benches, engine, chains, trials);
criterion_main!(benches);

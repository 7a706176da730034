use contain_core::engine::{run, Configuration, RunOptions};
use contain_core::experiments::{run_trial, run_trials, star_instance, TrialOptions};
use contain_core::faults::{broadcast_sweep, legitimate_config, memory_sweep, n_conf};
use contain_core::graph::{generate, independent_degree, GraphSpec};
use contain_core::markov::{
    comp2_bound, dominating_chain, expected_series, memory_chain, message_chain, solve_absorbing, weighted_series,
    DEFAULT_TOL,
};
use contain_core::{Acol, ColorValue, ConflictRecoloring, FaultScenario, Protocol, SeedTree, StatePatch};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn message_chain_agrees_with_series() {
    for d in 1..=100 {
        let s = solve_absorbing(&message_chain(d).unwrap()).unwrap();
        let chain = s.expected_from(&d.to_string()).unwrap();
        let series = expected_series(d, 0.5, DEFAULT_TOL);
        assert!((chain - series).abs() < 1e-9, "d={d}: {chain} vs {series}");
    }
}

#[test]
fn expected_series_is_strictly_increasing() {
    let values: Vec<f64> = (1..=200).map(|d| expected_series(d, 0.5, DEFAULT_TOL)).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn weighted_series_stays_under_integral_bound() {
    for d in 1..=100 {
        for q in [0.25, 0.5, 0.75] {
            assert!(weighted_series(d, q, DEFAULT_TOL) <= comp2_bound(d, q), "d={d} q={q}");
        }
    }
}

#[test]
fn memory_chain_expectations_from_every_conflict_state() {
    for d in 2..=60 {
        let chain = memory_chain(d).unwrap();
        let s = solve_absorbing(&chain).unwrap();
        for i in 0..=d {
            let e = s.expected_from(&format!("C{i}")).unwrap();
            assert!(e <= 4.0, "d={d} C{i}: {e}");
        }
        assert!(s.expected_from("I").unwrap() < 5.0);
    }
}

/// Conflict persistence of the recoloring on K2 with both nodes on color 0,
/// by enumerating both coins and both uniform choices.
fn k2_resolution_probability(palette: u32) -> f64 {
    let free: Vec<u32> = (1..=palette).collect();
    let pick = 1.0 / free.len() as f64;
    let mut persist = 0.0;
    for a_moves in [false, true] {
        for b_moves in [false, true] {
            let choices_a: Vec<(u32, f64)> = if a_moves { free.iter().map(|&c| (c, pick)).collect() } else { vec![(0, 1.0)] };
            let choices_b: Vec<(u32, f64)> = if b_moves { free.iter().map(|&c| (c, pick)).collect() } else { vec![(0, 1.0)] };
            for &(ca, pa) in &choices_a {
                for &(cb, pb) in &choices_b {
                    if ca == cb {
                        persist += 0.25 * pa * pb;
                    }
                }
            }
        }
    }
    1.0 - persist
}

#[test]
fn dominating_chain_bounds_recoloring_on_k2() {
    let g = generate(&GraphSpec::Complete { n: 2 }).unwrap();
    let p01 = k2_resolution_probability(g.max_degree() as u32);
    assert!((p01 - 0.5).abs() < 1e-12);
    let mut lower = DMatrix::zeros(2, 2);
    lower[(0, 1)] = p01;
    let bound = solve_absorbing(&dominating_chain(1, &lower).unwrap()).unwrap().expected[0];

    let legit = vec![0u32, 1];
    let fault = FaultScenario::memory(1, StatePatch::color(ColorValue::Color(0)));
    let s = run_trials(&g, &ConflictRecoloring, &legit, &fault, 20_000, 3, &TrialOptions::default()).unwrap();
    let m = &s.rounds_to_legitimate;
    assert!(m.mean <= bound + 3.0 * m.std_error, "simulated {} vs bound {bound}", m.mean);
}

#[test]
fn acol_stabilizes_within_log_budget_on_gnp64() {
    let g = generate(&GraphSpec::Gnp { n: 64, p: 0.1, seed: 12 }).unwrap();
    let budget = 10 * 6 + 50;
    let runs = 500;
    let within = (0..runs)
        .filter(|&t| {
            let seeds = SeedTree::new(77).trial(t);
            let mut rng = seeds.child(0).rng();
            let states = (0..g.n()).map(|v| Acol.random_state(&g, v, &mut rng)).collect();
            let opts = RunOptions { max_rounds: budget, ..RunOptions::default() };
            run(&g, Configuration::new(states), &Acol, None, &seeds, &opts).is_ok()
        })
        .count();
    assert!(within as f64 >= 0.99 * runs as f64, "{within}/{runs}");
}

#[test]
fn worst_case_broadcast_on_single_leaf_star_averages_two() {
    let (g, states) = star_instance(1).unwrap();
    let fault = FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), true));
    let s = run_trials(&g, &Acol, &states, &fault, 50_000, 1, &TrialOptions::default()).unwrap();
    let m = &s.rounds_to_legal;
    assert!((m.mean - 2.0).abs() <= 3.0 * m.std_error, "{} ± {}", m.mean, m.std_error);
    assert_eq!(s.rounds_to_legitimate.mean, m.mean + 1.0);
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let (g, states) = star_instance(6).unwrap();
    let fault = FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), true));
    let in_pool = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&g, &Acol, &states, &fault, 3_000, 11, &TrialOptions::default()).unwrap())
    };
    assert_eq!(in_pool(1), in_pool(4));
}

fn arb_graph() -> impl Strategy<Value = GraphSpec> {
    prop_oneof![
        (3usize..25, 0.05f64..0.5, any::<u64>()).prop_map(|(n, p, seed)| GraphSpec::Gnp { n, p, seed }),
        (5usize..40, 0.15f64..0.4, any::<u64>()).prop_map(|(n, radius, seed)| GraphSpec::UnitDisc { n, radius, seed }),
        (1usize..9).prop_map(|d| GraphSpec::Star { d }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_faults_stay_within_the_conflict_set(
        spec in arb_graph(),
        node_pick in any::<prop::sample::Index>(),
        scenario_pick in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let g = generate(&spec).unwrap();
        let states = legitimate_config(&g, &Acol, seed, 10_000).unwrap();
        let v = node_pick.index(g.n());
        let mut scenarios = memory_sweep(&g, &states, v);
        scenarios.extend(broadcast_sweep(&g, &states, v));
        let scenario = scenarios[scenario_pick.index(scenarios.len())];
        let r = run_trial(&g, &Acol, &states, &scenario, &SeedTree::new(seed), 10_000).unwrap();

        prop_assert!(r.radius <= 1);
        prop_assert!(r.rounds_to_legal <= r.rounds_to_legitimate);
        let di = independent_degree(&g, v).unwrap();
        if scenario.is_broadcast() {
            prop_assert!(!r.faulty_changed);
            prop_assert!(r.contaminated.len() <= di);
        } else {
            prop_assert!(r.contaminated.len() <= di + 1);
        }
        let patch = scenario.patch();
        if let Some(ColorValue::Color(c)) = patch.color {
            let conf = n_conf(&g, &states, v, c);
            prop_assert!(r.contaminated.iter().all(|w| *w == v || conf.members.contains(w)));
        }
    }

    #[test]
    fn same_seed_same_outcome(spec in arb_graph(), seed in any::<u64>()) {
        let g = generate(&spec).unwrap();
        let mut rng = SeedTree::new(seed).rng();
        let states: Vec<_> = (0..g.n()).map(|v| Acol.random_state(&g, v, &mut rng)).collect();
        let a = run(&g, Configuration::new(states.clone()), &Acol, None, &SeedTree::new(seed), &RunOptions::default()).unwrap();
        let b = run(&g, Configuration::new(states), &Acol, None, &SeedTree::new(seed), &RunOptions::default()).unwrap();
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.config, b.config);
    }
}

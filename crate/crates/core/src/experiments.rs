//! Monte Carlo trials of fault recovery, and the side-by-side comparison with
//! the absorbing-chain predictions.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run, Configuration, EngineError, RoundTrace, RunOptions};
use crate::faults::{memory_sweep, ColorValue, FaultScenario, StatePatch};
use crate::graph::{generate, independent_degree, Graph, GraphError, GraphSpec, NodeId};
use crate::markov::{
    containment_bound_memory, containment_bound_message, memory_chain, message_chain, solve_absorbing,
    variance_formula, MarkovError,
};
use crate::protocols::{Acol, ColorState, Protocol, ProtocolKind};
use crate::seed::SeedTree;
use crate::stats::{z_score, MetricSummary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialResult {
    pub rounds_to_legal: u64,
    pub rounds_to_legitimate: u64,
    /// Nodes whose state changed at least once during recovery.
    pub contaminated: Vec<NodeId>,
    pub radius: usize,
    pub faulty_changed: bool,
}

/// Largest hop distance from `faulty` to a node that changed during recovery.
pub fn measure_radius(trace: &RoundTrace, g: &Graph, faulty: NodeId) -> usize {
    let contaminated = trace.contaminated();
    if contaminated.is_empty() {
        return 0;
    }
    let dist = g.distances_from(faulty);
    contaminated.iter().map(|&w| dist[w].unwrap_or(usize::MAX)).max().unwrap_or(0)
}

/// Bound on the number of contaminated nodes checked in every trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainmentCap {
    #[default]
    Unchecked,
    Fixed(usize),
    /// δ_i(v) for a broadcast fault at `v`, δ_i(v) + 1 for a memory fault.
    IndependentDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub max_rounds: u64,
    pub radius_cap: Option<usize>,
    pub containment_cap: ContainmentCap,
    /// Count broadcast trials in which the sender itself changed state.
    pub check_sender_unchanged: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            max_rounds: crate::engine::DEFAULT_MAX_ROUNDS,
            radius_cap: None,
            containment_cap: ContainmentCap::Unchecked,
            check_sender_unchanged: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violations {
    pub radius: u64,
    pub containment: u64,
    pub sender_changed: u64,
}

impl Violations {
    pub fn total(&self) -> u64 {
        self.radius + self.containment + self.sender_changed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub protocol: ProtocolKind,
    pub scenarios: Vec<FaultScenario>,
    pub trials: u64,
    pub master_seed: u64,
    pub divergent: u64,
    pub rounds_to_legal: MetricSummary,
    pub rounds_to_legitimate: MetricSummary,
    pub radius: MetricSummary,
    pub contaminated: MetricSummary,
    pub violations: Violations,
}

impl TrialSummary {
    pub fn is_clean(&self) -> bool {
        self.divergent == 0 && self.violations.total() == 0
    }
}

/// One recovery from `initial` under `scenario`.
pub fn run_trial<P: Protocol>(
    g: &Graph,
    protocol: &P,
    initial: &[P::State],
    scenario: &FaultScenario,
    seeds: &SeedTree,
    max_rounds: u64,
) -> Result<TrialResult, EngineError> {
    let opts = RunOptions { max_rounds, ..RunOptions::default() };
    let out = run(g, Configuration::new(initial.to_vec()), protocol, Some(scenario), seeds, &opts)?;
    let faulty = scenario.faulty_node();
    let contaminated = out.trace.contaminated();
    Ok(TrialResult {
        rounds_to_legal: out.rounds_to_legal,
        rounds_to_legitimate: out.rounds_to_legitimate,
        radius: measure_radius(&out.trace, g, faulty),
        faulty_changed: contaminated.binary_search(&faulty).is_ok(),
        contaminated,
    })
}

fn containment_limit(g: &Graph, cap: ContainmentCap, scenario: &FaultScenario) -> Result<Option<usize>, GraphError> {
    Ok(match cap {
        ContainmentCap::Unchecked => None,
        ContainmentCap::Fixed(k) => Some(k),
        ContainmentCap::IndependentDegree => {
            let di = independent_degree(g, scenario.faulty_node())?;
            Some(if scenario.is_broadcast() { di } else { di + 1 })
        }
    })
}

/// `trials` recoveries under one scenario; see [`run_sweep`].
pub fn run_trials<P: Protocol>(
    g: &Graph,
    protocol: &P,
    initial: &[P::State],
    scenario: &FaultScenario,
    trials: u64,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<TrialSummary, ExperimentError> {
    run_sweep(g, protocol, initial, std::slice::from_ref(scenario), trials, master_seed, opts)
}

/// `trials_per_scenario` recoveries under each scenario, pooled into one
/// summary. Trial `i` (numbered across the whole sweep) draws from the seed
/// stream `hash(master_seed, i)`, so results do not depend on scheduling.
pub fn run_sweep<P: Protocol>(
    g: &Graph,
    protocol: &P,
    initial: &[P::State],
    scenarios: &[FaultScenario],
    trials_per_scenario: u64,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<TrialSummary, ExperimentError> {
    if trials_per_scenario == 0 || scenarios.is_empty() {
        return Err(ExperimentError::Invalid("at least one scenario and one trial are required".into()));
    }
    let limits = scenarios
        .iter()
        .map(|s| containment_limit(g, opts.containment_cap, s))
        .collect::<Result<Vec<_>, _>>()?;
    let master = SeedTree::new(master_seed);
    let total = scenarios.len() as u64 * trials_per_scenario;

    let outcomes: Vec<Result<Option<TrialResult>, EngineError>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let scenario = &scenarios[(i / trials_per_scenario) as usize];
            match run_trial(g, protocol, initial, scenario, &master.trial(i), opts.max_rounds) {
                Ok(r) => Ok(Some(r)),
                Err(EngineError::Divergence { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut legal = Vec::with_capacity(total as usize);
    let mut legitimate = Vec::with_capacity(total as usize);
    let mut radius = Vec::with_capacity(total as usize);
    let mut contaminated = Vec::with_capacity(total as usize);
    let mut violations = Violations::default();
    let mut divergent = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let idx = i / trials_per_scenario as usize;
        let Some(r) = outcome? else {
            divergent += 1;
            continue;
        };
        if opts.radius_cap.is_some_and(|cap| r.radius > cap) {
            violations.radius += 1;
        }
        if limits[idx].is_some_and(|cap| r.contaminated.len() > cap) {
            violations.containment += 1;
        }
        if opts.check_sender_unchanged && scenarios[idx].is_broadcast() && r.faulty_changed {
            violations.sender_changed += 1;
        }
        legal.push(r.rounds_to_legal);
        legitimate.push(r.rounds_to_legitimate);
        radius.push(r.radius as u64);
        contaminated.push(r.contaminated.len() as u64);
    }

    Ok(TrialSummary {
        protocol: protocol.kind(),
        scenarios: scenarios.to_vec(),
        trials: total,
        master_seed,
        divergent,
        rounds_to_legal: MetricSummary::from_samples(&legal),
        rounds_to_legitimate: MetricSummary::from_samples(&legitimate),
        radius: MetricSummary::from_samples(&radius),
        contaminated: MetricSummary::from_samples(&contaminated),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub p95: u64,
    pub max: u64,
    pub divergent: u64,
}

/// Stabilization time from uniformly random states, per graph size. Each
/// trial draws a fresh graph from `make_graph(n, seed)`.
pub fn stabilization_profile<P, F>(
    protocol: &P,
    sizes: &[usize],
    trials: u64,
    master_seed: u64,
    max_rounds: u64,
    make_graph: F,
) -> Result<Vec<ProfileRow>, ExperimentError>
where
    P: Protocol,
    F: Fn(usize, u64) -> Result<Graph, GraphError> + Sync,
{
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Invalid("sizes must be strictly ascending".into()));
    }
    let master = SeedTree::new(master_seed);
    let opts = RunOptions { max_rounds, ..RunOptions::default() };
    sizes
        .iter()
        .map(|&n| {
            let per_size = master.child(n as u64);
            let results: Vec<Result<Option<u64>, ExperimentError>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seeds = per_size.trial(t);
                    let g = make_graph(n, seeds.child(1).seed())?;
                    let mut rng = seeds.child(2).rng();
                    let states = (0..g.n()).map(|v| protocol.random_state(&g, v, &mut rng)).collect();
                    match run(&g, Configuration::new(states), protocol, None, &seeds, &opts) {
                        Ok(out) => Ok(Some(out.rounds_to_legitimate)),
                        Err(EngineError::Divergence { .. }) => Ok(None),
                        Err(e) => Err(e.into()),
                    }
                })
                .collect();
            let mut rounds = Vec::with_capacity(trials as usize);
            let mut divergent = 0;
            for r in results {
                match r? {
                    Some(k) => rounds.push(k),
                    None => divergent += 1,
                }
            }
            let summary = MetricSummary::from_samples(&rounds);
            Ok(ProfileRow { n, trials, mean: summary.mean, p95: summary.quantile(0.95), max: summary.max, divergent })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    /// `c` in `mean ≈ c · log2 n`.
    pub slope: f64,
    /// `‖mean − c·log2 n‖ / ‖mean‖`.
    pub residual_ratio: f64,
}

/// Least-squares fit of `y ≈ c · log2 n` through the origin.
pub fn fit_log2(points: &[(usize, f64)]) -> LogFit {
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).log2()).collect();
    let sxy: f64 = xs.iter().zip(points).map(|(x, &(_, y))| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let resid: f64 = xs.iter().zip(points).map(|(x, &(_, y))| (y - slope * x).powi(2)).sum();
    let norm: f64 = points.iter().map(|&(_, y)| y * y).sum();
    let residual_ratio = if norm > 0.0 { (resid / norm).sqrt() } else { 0.0 };
    LogFit { slope, residual_ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub d: usize,
    pub e_chain: f64,
    pub e_closed_form: f64,
    pub var_chain: f64,
    pub var_bound: f64,
    pub e_memory_chain: f64,
    pub var_memory_chain: f64,
    pub bound_memory: f64,
}

impl AnalysisRow {
    pub const CSV_HEADER: &'static str =
        "d,E_chain,E_closed_form,Var_chain,Var_bound,E_memory_chain,Var_memory_chain,bound_memory";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            self.d,
            self.e_chain,
            self.e_closed_form,
            self.var_chain,
            self.var_bound,
            self.e_memory_chain,
            self.var_memory_chain,
            self.bound_memory
        )
    }
}

/// Chain predictions and closed forms for `d = 1..=d_max`.
pub fn analysis_table(d_max: usize) -> Result<Vec<AnalysisRow>, MarkovError> {
    (1..=d_max)
        .map(|d| {
            let message = solve_absorbing(&message_chain(d)?)?;
            let memory = solve_absorbing(&memory_chain(d)?)?;
            let top = d.to_string();
            Ok(AnalysisRow {
                d,
                e_chain: message.expected_from(&top).expect("state d exists"),
                e_closed_form: containment_bound_message(d),
                var_chain: message.variance_from(&top).expect("state d exists"),
                var_bound: variance_formula(d),
                e_memory_chain: memory.expected_from("I").expect("state I exists"),
                var_memory_chain: memory.variance_from("I").expect("state I exists"),
                bound_memory: containment_bound_memory(d),
            })
        })
        .collect()
}

/// A legitimate coloring of `star(d)`: center 1, leaves 0, all final.
pub fn star_instance(d: usize) -> Result<(Graph, Vec<ColorState>), GraphError> {
    let spec = GraphSpec::Star { d };
    let g = generate(&spec)?;
    let colors = spec.designated_coloring().expect("stars carry a designated coloring");
    Ok((g, colors.into_iter().map(ColorState::settled).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub d: usize,
    pub trials: u64,
    pub predicted_mean: f64,
    pub predicted_var: f64,
    /// Closed-form bound for this `d`.
    pub bound: f64,
    pub sim_mean: f64,
    pub sim_var: f64,
    pub se_mean: f64,
    pub se_var: f64,
    pub z_mean: f64,
    pub z_var: f64,
    pub divergent: u64,
    pub pass: bool,
}

impl CompareRow {
    pub const CSV_HEADER: &'static str =
        "d,trials,predicted_mean,predicted_var,bound,sim_mean,sim_var,se_mean,se_var,z_mean,z_var,divergent,pass";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.6},{:.6},{},{}",
            self.d,
            self.trials,
            self.predicted_mean,
            self.predicted_var,
            self.bound,
            self.sim_mean,
            self.sim_var,
            self.se_mean,
            self.se_var,
            self.z_mean,
            self.z_var,
            self.divergent,
            self.pass
        )
    }
}

pub const Z_LIMIT: f64 = 3.0;

/// Worst-case broadcast at the center of `star(d)` against the message chain:
/// two-sided z-scores of the mean and variance of `rounds_to_legal`.
pub fn compare_broadcast(
    ds: RangeInclusive<usize>,
    trials: u64,
    master_seed: u64,
    max_rounds: u64,
) -> Result<Vec<CompareRow>, ExperimentError> {
    let master = SeedTree::new(master_seed);
    ds.map(|d| {
        let (g, states) = star_instance(d)?;
        let scenario = FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), true));
        let opts = TrialOptions { max_rounds, ..TrialOptions::default() };
        let summary = run_trials(&g, &Acol, &states, &scenario, trials, master.child(d as u64).seed(), &opts)?;
        let chain = solve_absorbing(&message_chain(d)?)?;
        let top = d.to_string();
        let predicted_mean = chain.expected_from(&top).expect("state d exists");
        let predicted_var = chain.variance_from(&top).expect("state d exists");
        let m = &summary.rounds_to_legal;
        let z_mean = z_score(m.mean, predicted_mean, m.std_error);
        let z_var = z_score(m.variance, predicted_var, m.variance_se);
        Ok(CompareRow {
            d,
            trials: summary.trials,
            predicted_mean,
            predicted_var,
            bound: containment_bound_message(d),
            sim_mean: m.mean,
            sim_var: m.variance,
            se_mean: m.std_error,
            se_var: m.variance_se,
            z_mean,
            z_var,
            divergent: summary.divergent,
            pass: summary.divergent == 0 && z_mean.abs() <= Z_LIMIT && z_var.abs() <= Z_LIMIT,
        })
    })
    .collect()
}

/// Every memory corruption of the center of `star(d)` against the memory
/// bound `H_d/ln 2 + 11/2`. The row reports the scenario with the largest
/// mean containment time; `z_mean` is one-sided (only exceeding the bound
/// counts against it).
pub fn compare_memory(
    ds: RangeInclusive<usize>,
    trials: u64,
    master_seed: u64,
    max_rounds: u64,
) -> Result<Vec<CompareRow>, ExperimentError> {
    let master = SeedTree::new(master_seed);
    ds.map(|d| {
        let (g, states) = star_instance(d)?;
        let chain = solve_absorbing(&memory_chain(d)?)?;
        let bound = containment_bound_memory(d);
        let opts = TrialOptions { max_rounds, ..TrialOptions::default() };
        let per_d = master.child(d as u64);
        let mut worst: Option<TrialSummary> = None;
        for (k, scenario) in memory_sweep(&g, &states, 0).iter().enumerate() {
            let s = run_trials(&g, &Acol, &states, scenario, trials, per_d.trial(k as u64).seed(), &opts)?;
            let replace = match &worst {
                Some(w) => s.divergent > w.divergent || s.rounds_to_legitimate.mean > w.rounds_to_legitimate.mean,
                None => true,
            };
            if replace {
                worst = Some(s);
            }
        }
        let worst = worst.expect("memory sweep is never empty");
        let m = &worst.rounds_to_legitimate;
        let z_mean = z_score(m.mean, bound, m.std_error);
        Ok(CompareRow {
            d,
            trials: worst.trials,
            predicted_mean: chain.expected_from("I").expect("state I exists"),
            predicted_var: chain.variance_from("I").expect("state I exists"),
            bound,
            sim_mean: m.mean,
            sim_var: m.variance,
            se_mean: m.std_error,
            se_var: m.variance_se,
            z_mean,
            z_var: 0.0,
            divergent: worst.divergent,
            pass: worst.divergent == 0 && z_mean <= Z_LIMIT,
        })
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitDiscRow {
    pub instance_seed: u64,
    pub n: usize,
    pub max_independent_degree: usize,
    pub scenarios: usize,
    pub trials: u64,
    pub sim_mean: f64,
    pub se_mean: f64,
    pub max_rounds_seen: u64,
    /// `H/ln 2 + 11/2` at the instance's largest independent degree.
    pub bound: f64,
    pub z_mean: f64,
    pub divergent: u64,
    pub pass: bool,
}

impl UnitDiscRow {
    pub const CSV_HEADER: &'static str =
        "instance_seed,n,max_independent_degree,scenarios,trials,sim_mean,se_mean,max_rounds_seen,bound,z_mean,divergent,pass";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.12},{:.12},{},{:.12},{:.6},{},{}",
            self.instance_seed,
            self.n,
            self.max_independent_degree,
            self.scenarios,
            self.trials,
            self.sim_mean,
            self.se_mean,
            self.max_rounds_seen,
            self.bound,
            self.z_mean,
            self.divergent,
            self.pass
        )
    }
}

/// Memory-corruption sweep over every node of seeded `unit_disc(n, radius)`
/// instances. Each instance starts from a legitimate coloring reached from
/// random states; the pooled mean containment time is compared one-sided
/// against the memory bound.
pub fn compare_unit_disc_memory(
    instance_seeds: RangeInclusive<u64>,
    n: usize,
    radius: f64,
    trials_per_scenario: u64,
    master_seed: u64,
    max_rounds: u64,
) -> Result<Vec<UnitDiscRow>, ExperimentError> {
    let master = SeedTree::new(master_seed);
    instance_seeds
        .map(|seed| {
            let g = generate(&GraphSpec::UnitDisc { n, radius, seed })?;
            let delta_i = crate::graph::max_independent_degree(&g)?;
            let per_instance = master.child(seed);
            let states = crate::faults::legitimate_config(&g, &Acol, per_instance.child(0).seed(), max_rounds)?;
            let scenarios: Vec<FaultScenario> = (0..g.n()).flat_map(|v| memory_sweep(&g, &states, v)).collect();
            let opts = TrialOptions { max_rounds, ..TrialOptions::default() };
            let summary =
                run_sweep(&g, &Acol, &states, &scenarios, trials_per_scenario, per_instance.child(1).seed(), &opts)?;
            let m = &summary.rounds_to_legitimate;
            let bound = containment_bound_memory(delta_i.max(1));
            let z_mean = z_score(m.mean, bound, m.std_error);
            Ok(UnitDiscRow {
                instance_seed: seed,
                n,
                max_independent_degree: delta_i,
                scenarios: scenarios.len(),
                trials: summary.trials,
                sim_mean: m.mean,
                se_mean: m.std_error,
                max_rounds_seen: m.max,
                bound,
                z_mean,
                divergent: summary.divergent,
                pass: summary.divergent == 0 && z_mean <= Z_LIMIT,
            })
        })
        .collect()
}

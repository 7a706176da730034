use std::path::Path;

use contain_core::engine::{run, Configuration, EngineError, RunOptions, TraceLevel};
use contain_core::experiments::run_sweep;
use contain_core::faults::{legitimate_config, memory_sweep, worst_conflict};
use contain_core::{
    Acol, ColorState, ColorValue, ConflictRecoloring, FaultScenario, MaxFreeColoring, Mis, Protocol, ProtocolKind,
    RoundTrace, SeedTree, StatePatch, TrialOptions, TrialSummary,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, InitialState, ScenarioFamily, ScenarioSource};
use crate::output::{csv_document, resolve, write_file};
use crate::CliError;

/// Stream label for the stabilization run that produces the initial
/// configuration; trial streams are derived separately from the master seed.
const INITIAL_STREAM: u64 = 0x1417;

pub const SUMMARY_CSV_HEADER: &str = "protocol,graph,n,initial,scenarios,trials,master_seed,divergent,\
legal_mean,legal_se,legal_var,legal_var_se,legal_max,\
legitimate_mean,legitimate_se,legitimate_var,legitimate_var_se,legitimate_max,\
radius_mean,radius_max,contaminated_mean,contaminated_max,\
violations_radius,violations_containment,violations_sender_changed";

#[derive(Serialize)]
struct SummaryDocument<'a> {
    format: u32,
    graph: &'a str,
    n: usize,
    initial: InitialState,
    summary: &'a TrialSummary,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<TrialSummary, CliError> {
    let designated = cfg.spec.as_ref().and_then(|s| s.designated_coloring());
    let summary = match cfg.protocol {
        ProtocolKind::A1 => {
            let initial = initial_states(cfg, &Mis, None)?;
            execute(cfg, &Mis, &initial, &explicit(cfg)?)?
        }
        ProtocolKind::A2 => {
            let initial = initial_states(cfg, &MaxFreeColoring, designated)?;
            execute(cfg, &MaxFreeColoring, &initial, &explicit(cfg)?)?
        }
        ProtocolKind::A3 => {
            let initial = initial_states(cfg, &ConflictRecoloring, designated)?;
            execute(cfg, &ConflictRecoloring, &initial, &explicit(cfg)?)?
        }
        ProtocolKind::Acol => {
            let designated = designated.map(|c| c.into_iter().map(ColorState::settled).collect());
            let initial = initial_states(cfg, &Acol, designated)?;
            let scenarios = match cfg.scenario {
                ScenarioSource::Explicit(s) => vec![s],
                ScenarioSource::Family(f) => family_scenarios(cfg, &initial, f),
            };
            execute(cfg, &Acol, &initial, &scenarios)?
        }
    };
    Ok(summary)
}

fn explicit(cfg: &ExperimentConfig) -> Result<Vec<FaultScenario>, CliError> {
    match cfg.scenario {
        ScenarioSource::Explicit(s) => Ok(vec![s]),
        ScenarioSource::Family(_) => Err(CliError::Config(format!(
            "invalid value for `scenario_family`: only available for acol, not {}",
            cfg.protocol
        ))),
    }
}

fn initial_states<P: Protocol>(
    cfg: &ExperimentConfig,
    protocol: &P,
    designated: Option<Vec<P::State>>,
) -> Result<Vec<P::State>, CliError> {
    match cfg.initial {
        InitialState::Designated => {
            let states = designated.ok_or_else(|| {
                CliError::Config(format!(
                    "invalid value for `initial`: graph `{}` has no designated configuration for {}",
                    cfg.graph_label, cfg.protocol
                ))
            })?;
            if !protocol.is_legitimate(&cfg.graph, &states) {
                return Err(CliError::Config(format!(
                    "invalid value for `initial`: the designated configuration of `{}` is not legitimate for {}",
                    cfg.graph_label, cfg.protocol
                )));
            }
            Ok(states)
        }
        InitialState::Stabilize => {
            let seed = SeedTree::new(cfg.seed).child(INITIAL_STREAM).seed();
            legitimate_config(&cfg.graph, protocol, seed, cfg.max_rounds).map_err(|e| match e {
                EngineError::Divergence { max_rounds, .. } => {
                    CliError::Violation(format!("initial stabilization did not finish within {max_rounds} rounds"))
                }
                other => CliError::Engine(other),
            })
        }
    }
}

fn family_scenarios(cfg: &ExperimentConfig, states: &[ColorState], family: ScenarioFamily) -> Vec<FaultScenario> {
    let nodes: Vec<usize> = match &cfg.nodes {
        Some(nodes) => nodes.clone(),
        None => (0..cfg.graph.n()).collect(),
    };
    nodes
        .into_iter()
        .flat_map(|v| match family {
            ScenarioFamily::WorstCaseBroadcast => {
                let c_f = ColorValue::Color(worst_conflict(&cfg.graph, states, v).color);
                vec![FaultScenario::broadcast(v, StatePatch::both(c_f, true))]
            }
            ScenarioFamily::MemorySweep => memory_sweep(&cfg.graph, states, v),
        })
        .collect()
}

fn execute<P: Protocol>(
    cfg: &ExperimentConfig,
    protocol: &P,
    initial: &[P::State],
    scenarios: &[FaultScenario],
) -> Result<TrialSummary, CliError> {
    let opts = TrialOptions {
        max_rounds: cfg.max_rounds,
        radius_cap: cfg.invariants.radius_cap,
        containment_cap: cfg.invariants.containment(),
        check_sender_unchanged: cfg.invariants.sender_unchanged,
    };
    let summary = run_sweep(&cfg.graph, protocol, initial, scenarios, cfg.trials, cfg.seed, &opts)?;

    if let Some(path) = &cfg.output.trace {
        let trace = first_trial_trace(cfg, protocol, initial, &scenarios[0])?;
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).expect("writing to memory");
        write_file(&resolve(path, &cfg.base), &String::from_utf8(buf).expect("JSON is UTF-8"))?;
    }
    if let Some(path) = &cfg.output.summary_json {
        write_file(&resolve(path, &cfg.base), &summary_json(cfg, &summary))?;
    }
    if let Some(path) = &cfg.output.summary_csv {
        write_file(&resolve(path, &cfg.base), &csv_document(SUMMARY_CSV_HEADER, [summary_csv_row(cfg, &summary)]))?;
    }
    Ok(summary)
}

/// Trial 0 again, recorded in full. It uses the same seed stream as trial 0
/// of the sweep, so the trace is the run the summary counted.
fn first_trial_trace<P: Protocol>(
    cfg: &ExperimentConfig,
    protocol: &P,
    initial: &[P::State],
    scenario: &FaultScenario,
) -> Result<RoundTrace, CliError> {
    let opts = RunOptions { max_rounds: cfg.max_rounds, level: TraceLevel::Full };
    let seeds = SeedTree::new(cfg.seed).trial(0);
    match run(&cfg.graph, Configuration::new(initial.to_vec()), protocol, Some(scenario), &seeds, &opts) {
        Ok(out) => Ok(out.trace),
        Err(EngineError::Divergence { trace, .. }) => Ok(*trace),
        Err(e) => Err(e.into()),
    }
}

pub fn summary_json(cfg: &ExperimentConfig, summary: &TrialSummary) -> String {
    let doc = SummaryDocument {
        format: crate::config::FORMAT_VERSION,
        graph: &cfg.graph_label,
        n: cfg.graph.n(),
        initial: cfg.initial,
        summary,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

pub fn summary_csv_row(cfg: &ExperimentConfig, s: &TrialSummary) -> String {
    let initial = match cfg.initial {
        InitialState::Designated => "designated",
        InitialState::Stabilize => "stabilize",
    };
    let (legal, legit) = (&s.rounds_to_legal, &s.rounds_to_legitimate);
    format!(
        "{},{},{},{},{},{},{},{},{:.12},{:.12},{:.12},{:.12},{},{:.12},{:.12},{:.12},{:.12},{},{:.12},{},{:.12},{},{},{},{}",
        s.protocol,
        csv_field(&cfg.graph_label),
        cfg.graph.n(),
        initial,
        s.scenarios.len(),
        s.trials,
        s.master_seed,
        s.divergent,
        legal.mean,
        legal.std_error,
        legal.variance,
        legal.variance_se,
        legal.max,
        legit.mean,
        legit.std_error,
        legit.variance,
        legit.variance_se,
        legit.max,
        s.radius.mean,
        s.radius.max,
        s.contaminated.mean,
        s.contaminated.max,
        s.violations.radius,
        s.violations.containment,
        s.violations.sender_changed,
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line for the terminal.
pub fn describe(summary: &TrialSummary, source: &Path) -> String {
    format!(
        "{}: {} trials over {} scenario(s), rounds_to_legitimate mean {:.4} (max {}), radius max {}, divergent {}, violations {}",
        source.display(),
        summary.trials,
        summary.scenarios.len(),
        summary.rounds_to_legitimate.mean,
        summary.rounds_to_legitimate.max,
        summary.radius.max,
        summary.divergent,
        summary.violations.total()
    )
}

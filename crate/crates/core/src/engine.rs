//! Synchronous round executor.
//!
//! A round has two phases: every node broadcasts a message derived from its
//! current state, then every node moves on the messages of its neighbors. All
//! moves read the same pre-round configuration, so the order in which nodes
//! are evaluated is irrelevant.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::faults::{FaultError, FaultKind, FaultScenario};
use crate::graph::{Graph, NodeId};
use crate::protocols::{NodeView, Protocol, ProtocolError};
use crate::seed::SeedTree;

pub const DEFAULT_MAX_ROUNDS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration has {states} states but the graph has {nodes} nodes")]
    ConfigMismatch { states: usize, nodes: usize },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error("no legitimate configuration after {max_rounds} rounds")]
    Divergence { max_rounds: u64, trace: Box<RoundTrace> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration<S> {
    pub states: Vec<S>,
    /// Number of rounds executed to reach this configuration.
    pub round: u64,
}

impl<S> Configuration<S> {
    pub fn new(states: Vec<S>) -> Self {
        Self { states, round: 0 }
    }
}

/// One broadcast replaced in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption<M> {
    pub sender: NodeId,
    pub payload: M,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TraceLevel {
    /// Changed-node sets only.
    #[default]
    Changes,
    /// Also the delivered messages and the configuration after each round.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub changed: Vec<NodeId>,
    /// Per-sender payload actually delivered, including any corruption.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub messages: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoundTrace {
    pub rounds: Vec<RoundRecord>,
    /// Index into `rounds` of the first round affected by the fault (the
    /// fault round itself for a broadcast corruption).
    pub recovery_start: usize,
}

impl RoundTrace {
    pub fn recovery(&self) -> &[RoundRecord] {
        &self.rounds[self.recovery_start..]
    }

    /// Nodes that changed state at least once during recovery, sorted.
    pub fn contaminated(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.recovery().iter().flat_map(|r| r.changed.iter().copied()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// One JSON object per round, preceded by a `{"format":1}` header line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{{\"format\":1,\"recovery_start\":{}}}", self.recovery_start)?;
        for record in &self.rounds {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Execute one synchronous round.
pub fn step<P: Protocol>(
    g: &Graph,
    cfg: &Configuration<P::State>,
    protocol: &P,
    corruption: Option<&Corruption<P::Message>>,
    seeds: &SeedTree,
    level: TraceLevel,
) -> Result<(Configuration<P::State>, RoundRecord), EngineError> {
    if cfg.states.len() != g.n() {
        return Err(EngineError::ConfigMismatch { states: cfg.states.len(), nodes: g.n() });
    }
    let mut messages: Vec<P::Message> = cfg.states.iter().map(|s| protocol.message(s)).collect();
    if let Some(c) = corruption {
        messages[c.sender] = c.payload.clone();
    }

    let max_degree = g.max_degree();
    let mut inbox: Vec<P::Message> = Vec::with_capacity(max_degree);
    let mut next = Vec::with_capacity(g.n());
    let mut changed = Vec::new();
    for (v, state) in cfg.states.iter().enumerate() {
        inbox.clear();
        inbox.extend(g.neighbors(v).iter().map(|&w| messages[w].clone()));
        let view = NodeView { id: v, degree: g.degree(v), max_degree };
        let mut rng = seeds.node_round(cfg.round, v);
        let moved = protocol.transition(&view, state, &inbox, &mut rng)?;
        if moved != *state {
            changed.push(v);
        }
        next.push(moved);
    }

    let full = level == TraceLevel::Full;
    let record = RoundRecord {
        round: cfg.round + 1,
        changed,
        messages: full.then(|| serde_json::to_value(&messages).expect("messages serialize")),
        states: full.then(|| serde_json::to_value(&next).expect("states serialize")),
    };
    Ok((Configuration { states: next, round: cfg.round + 1 }, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Cap on counted rounds after the fault (or from the start without one).
    pub max_rounds: u64,
    pub level: TraceLevel,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_rounds: DEFAULT_MAX_ROUNDS, level: TraceLevel::Changes }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    /// Counted rounds until the configuration was first legal.
    pub rounds_to_legal: u64,
    /// Counted rounds until the configuration was first legitimate.
    pub rounds_to_legitimate: u64,
    pub trace: RoundTrace,
    pub config: Configuration<S>,
}

/// Run until legitimate, optionally injecting one fault.
///
/// Counting starts after the fault: a memory fault is written at a round
/// boundary and round 1 is the first round that sees it; a broadcast fault's
/// delivery round is round 0 of the recovery, so counting starts with the
/// round after it. Without a fault, counting starts at the first round.
pub fn run<P: Protocol>(
    g: &Graph,
    initial: Configuration<P::State>,
    protocol: &P,
    scenario: Option<&FaultScenario>,
    seeds: &SeedTree,
    opts: &RunOptions,
) -> Result<RunOutcome<P::State>, EngineError> {
    if initial.states.len() != g.n() {
        return Err(EngineError::ConfigMismatch { states: initial.states.len(), nodes: g.n() });
    }
    let mut trace = RoundTrace::default();
    let mut cfg = initial;

    if let Some(scenario) = scenario {
        scenario.check(g)?;
        for _ in 0..scenario.injection_round {
            let (next, record) = step(g, &cfg, protocol, None, seeds, opts.level)?;
            trace.rounds.push(record);
            cfg = next;
        }
        trace.recovery_start = trace.rounds.len();
        match scenario.kind {
            FaultKind::Memory { node, ref patch } => {
                cfg.states[node] = protocol.patch_state(g, node, &cfg.states[node], patch)?;
            }
            FaultKind::Broadcast { sender, ref patch } => {
                let payload = protocol.patch_message(g, sender, &protocol.message(&cfg.states[sender]), patch)?;
                let corruption = Corruption { sender, payload };
                let (next, record) = step(g, &cfg, protocol, Some(&corruption), seeds, opts.level)?;
                trace.rounds.push(record);
                cfg = next;
            }
        }
    }

    let mut rounds_to_legal = None;
    let mut counted = 0u64;
    loop {
        if rounds_to_legal.is_none() && protocol.is_legal(g, &cfg.states) {
            rounds_to_legal = Some(counted);
        }
        if protocol.is_legitimate(g, &cfg.states) {
            return Ok(RunOutcome {
                rounds_to_legal: rounds_to_legal.unwrap_or(counted),
                rounds_to_legitimate: counted,
                trace,
                config: cfg,
            });
        }
        if counted == opts.max_rounds {
            return Err(EngineError::Divergence { max_rounds: opts.max_rounds, trace: Box::new(trace) });
        }
        let (next, record) = step(g, &cfg, protocol, None, seeds, opts.level)?;
        trace.rounds.push(record);
        cfg = next;
        counted += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faults::{ColorValue, StatePatch};
    use crate::graph::{generate, GraphSpec};
    use crate::protocols::{Acol, ColorState};

    fn star(d: usize) -> (Graph, Vec<ColorState>) {
        let g = generate(&GraphSpec::Star { d }).unwrap();
        let mut states = vec![ColorState::settled(0); d + 1];
        states[0] = ColorState::settled(1);
        (g, states)
    }

    #[test]
    fn legitimate_start_is_silent() {
        let (g, states) = star(4);
        let cfg = Configuration::new(states.clone());
        let (next, record) = step(&g, &cfg, &Acol, None, &SeedTree::new(1), TraceLevel::Changes).unwrap();
        assert_eq!(next.states, states);
        assert!(record.changed.is_empty());

        let out = run(&g, cfg, &Acol, None, &SeedTree::new(1), &RunOptions::default()).unwrap();
        assert_eq!((out.rounds_to_legal, out.rounds_to_legitimate), (0, 0));
        assert!(out.trace.rounds.is_empty());
    }

    #[test]
    fn corrupted_broadcast_hits_exactly_the_matching_leaves() {
        let g = generate(&GraphSpec::Star { d: 5 }).unwrap();
        let mut states = vec![ColorState::settled(1); 6];
        states[0] = ColorState::settled(2);
        states[4] = ColorState::settled(0);
        states[5] = ColorState::settled(0);
        let cfg = Configuration::new(states);
        let payload = ColorState::settled(1);
        let corruption = Corruption { sender: 0, payload };
        for seed in 0..20 {
            let (next, record) =
                step(&g, &cfg, &Acol, Some(&corruption), &SeedTree::new(seed), TraceLevel::Changes).unwrap();
            assert_eq!(record.changed, vec![1, 2, 3]);
            assert!((1..=3).all(|w| !next.states[w].is_final));
            assert_eq!(next.states[0], cfg.states[0]);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let g = generate(&GraphSpec::Gnp { n: 40, p: 0.15, seed: 9 }).unwrap();
        let states: Vec<ColorState> = (0..40).map(|v| ColorState::tentative(Some(v as u32 % 3))).collect();
        let opts = RunOptions { level: TraceLevel::Full, ..RunOptions::default() };
        let a = run(&g, Configuration::new(states.clone()), &Acol, None, &SeedTree::new(5), &opts).unwrap();
        let b = run(&g, Configuration::new(states), &Acol, None, &SeedTree::new(5), &opts).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.config, b.config);
    }

    #[test]
    fn change_sets_match_consecutive_configurations() {
        let g = generate(&GraphSpec::Gnp { n: 30, p: 0.2, seed: 4 }).unwrap();
        let mut cfg = Configuration::new(vec![ColorState::tentative(None); 30]);
        let seeds = SeedTree::new(8);
        for _ in 0..15 {
            let (next, record) = step(&g, &cfg, &Acol, None, &seeds, TraceLevel::Changes).unwrap();
            let expected: Vec<NodeId> = (0..30).filter(|&v| cfg.states[v] != next.states[v]).collect();
            assert_eq!(record.changed, expected);
            cfg = next;
        }
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let (g, mut states) = star(2);
        states.pop();
        let err = step(&g, &Configuration::new(states), &Acol, None, &SeedTree::new(0), TraceLevel::Changes);
        assert!(matches!(err, Err(EngineError::ConfigMismatch { states: 2, nodes: 3 })));
    }

    #[test]
    fn tentative_broadcast_changes_nothing() {
        let (g, states) = star(4);
        let scenario = FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), false));
        let out = run(&g, Configuration::new(states), &Acol, Some(&scenario), &SeedTree::new(3), &RunOptions::default())
            .unwrap();
        assert_eq!(out.rounds_to_legitimate, 0);
        assert!(out.trace.contaminated().is_empty());
    }

    #[test]
    fn divergence_carries_the_trace() {
        let (g, _) = star(3);
        let states = vec![ColorState::tentative(None); 4];
        let opts = RunOptions { max_rounds: 1, ..RunOptions::default() };
        match run(&g, Configuration::new(states), &Acol, None, &SeedTree::new(0), &opts) {
            Err(EngineError::Divergence { max_rounds: 1, trace }) => assert_eq!(trace.rounds.len(), 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_has_header_and_one_line_per_round() {
        let g = generate(&GraphSpec::Path { n: 4 }).unwrap();
        let states = vec![ColorState::tentative(None); 4];
        let opts = RunOptions { level: TraceLevel::Full, ..RunOptions::default() };
        let out = run(&g, Configuration::new(states), &Acol, None, &SeedTree::new(2), &opts).unwrap();
        let mut buf = Vec::new();
        out.trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), out.trace.rounds.len() + 1);
        assert!(lines[0].contains("\"format\":1"));
        let first: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(first["round"], 1);
        assert!(first["states"].is_array());
    }
}

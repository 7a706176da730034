//! Single-fault scenarios: one corrupted memory cell or one corrupted
//! broadcast, applied to a legitimate configuration.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::engine::{run, Configuration, EngineError, RunOptions};
use crate::graph::{Graph, NodeId};
use crate::protocols::{Color, ColorState, MisState, Protocol, ProtocolKind};
use crate::seed::SeedTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FaultError {
    #[error("protocol {protocol} has no `{field}` field to corrupt at node {node}")]
    PatchField { protocol: ProtocolKind, field: &'static str, node: NodeId },
    #[error("invalid color for node {node}: {reason}")]
    InvalidColor { node: NodeId, reason: String },
    #[error("faulty node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
}

/// A color value as written in scenarios: an integer, or `"bottom"` for ⊥.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorValue {
    Bottom,
    Color(Color),
}

impl ColorValue {
    pub fn from_option(c: Option<Color>) -> Self {
        c.map_or(ColorValue::Bottom, ColorValue::Color)
    }

    pub fn as_option(self) -> Option<Color> {
        match self {
            ColorValue::Bottom => None,
            ColorValue::Color(c) => Some(c),
        }
    }
}

impl fmt::Display for ColorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorValue::Bottom => f.write_str("bottom"),
            ColorValue::Color(c) => write!(f, "{c}"),
        }
    }
}

impl Serialize for ColorValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ColorValue::Bottom => s.serialize_str("bottom"),
            ColorValue::Color(c) => s.serialize_u32(*c),
        }
    }
}

impl<'de> Deserialize<'de> for ColorValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ColorVisitor;

        impl Visitor<'_> for ColorVisitor {
            type Value = ColorValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative color or \"bottom\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ColorValue, E> {
                Color::try_from(v).map(ColorValue::Color).map_err(|_| E::custom(format!("color {v} too large")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ColorValue, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("negative color {v}"))).and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ColorValue, E> {
                match v {
                    "bottom" | "⊥" => Ok(ColorValue::Bottom),
                    other => Err(E::custom(format!("unknown color `{other}`"))),
                }
            }
        }

        d.deserialize_any(ColorVisitor)
    }
}

/// Field overrides applied to a node state or a broadcast payload. Absent
/// fields keep their current value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<ColorValue>,
    #[serde(default, rename = "final", skip_serializing_if = "Option::is_none")]
    pub is_final: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<MisState>,
}

impl StatePatch {
    pub fn color(c: ColorValue) -> Self {
        Self { color: Some(c), ..Self::default() }
    }

    pub fn flag(is_final: bool) -> Self {
        Self { is_final: Some(is_final), ..Self::default() }
    }

    pub fn both(c: ColorValue, is_final: bool) -> Self {
        Self { color: Some(c), is_final: Some(is_final), membership: None }
    }

    pub fn membership(m: MisState) -> Self {
        Self { membership: Some(m), ..Self::default() }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultKind {
    /// The node's own state is overwritten at a round boundary.
    Memory { node: NodeId, patch: StatePatch },
    /// One broadcast of `sender` is replaced in flight; every neighbor
    /// receives the corrupted payload, the sender's state is untouched.
    Broadcast { sender: NodeId, patch: StatePatch },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultScenario {
    #[serde(flatten)]
    pub kind: FaultKind,
    /// Fault-free rounds executed before the fault hits.
    #[serde(default)]
    pub injection_round: u64,
}

impl FaultScenario {
    pub fn memory(node: NodeId, patch: StatePatch) -> Self {
        Self { kind: FaultKind::Memory { node, patch }, injection_round: 0 }
    }

    pub fn broadcast(sender: NodeId, patch: StatePatch) -> Self {
        Self { kind: FaultKind::Broadcast { sender, patch }, injection_round: 0 }
    }

    pub fn faulty_node(&self) -> NodeId {
        match self.kind {
            FaultKind::Memory { node, .. } => node,
            FaultKind::Broadcast { sender, .. } => sender,
        }
    }

    pub fn patch(&self) -> &StatePatch {
        match &self.kind {
            FaultKind::Memory { patch, .. } | FaultKind::Broadcast { patch, .. } => patch,
        }
    }

    pub fn is_broadcast(&self) -> bool {
        matches!(self.kind, FaultKind::Broadcast { .. })
    }

    pub fn check(&self, g: &Graph) -> Result<(), FaultError> {
        let node = self.faulty_node();
        if node >= g.n() {
            return Err(FaultError::NodeOutOfRange { node, n: g.n() });
        }
        Ok(())
    }
}

/// The fault classes distinguished in the containment analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultClass {
    BroadcastFinal,
    BroadcastTentative,
    MemoryColor,
    MemoryFlag,
    MemoryBoth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictSet {
    pub node: NodeId,
    pub color: Color,
    pub members: Vec<NodeId>,
}

impl ConflictSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Neighbors of `v` currently holding `c_f`.
pub fn n_conf(g: &Graph, states: &[ColorState], v: NodeId, c_f: Color) -> ConflictSet {
    let members = g.neighbors(v).iter().copied().filter(|&w| states[w].color == Some(c_f)).collect();
    ConflictSet { node: v, color: c_f, members }
}

/// The color whose injection hits the most neighbors of `v`, smallest on ties.
pub fn worst_conflict(g: &Graph, states: &[ColorState], v: NodeId) -> ConflictSet {
    let top = g.neighbors(v).iter().filter_map(|&w| states[w].color).max().unwrap_or(0);
    (0..=top)
        .map(|c| n_conf(g, states, v, c))
        .fold(None::<ConflictSet>, |best, cs| match best {
            Some(b) if b.len() >= cs.len() => Some(b),
            _ => Some(cs),
        })
        .expect("color range is never empty")
}

/// The five representative faults at `v` in a legitimate coloring.
pub fn worst_case_scenarios(g: &Graph, states: &[ColorState], v: NodeId) -> Vec<(FaultClass, FaultScenario)> {
    let c_f = ColorValue::Color(worst_conflict(g, states, v).color);
    vec![
        (FaultClass::BroadcastFinal, FaultScenario::broadcast(v, StatePatch::both(c_f, true))),
        (FaultClass::BroadcastTentative, FaultScenario::broadcast(v, StatePatch::both(c_f, false))),
        (FaultClass::MemoryColor, FaultScenario::memory(v, StatePatch::color(c_f))),
        (FaultClass::MemoryFlag, FaultScenario::memory(v, StatePatch::flag(false))),
        (FaultClass::MemoryBoth, FaultScenario::memory(v, StatePatch::both(c_f, false))),
    ]
}

fn sweep_colors(top: Color) -> impl Iterator<Item = ColorValue> {
    std::iter::once(ColorValue::Bottom).chain((0..=top).map(ColorValue::Color))
}

/// Every memory corruption of `v`: color in `{⊥, 0..=δ(v)+1}`, final kept or
/// cleared, minus the no-op.
pub fn memory_sweep(g: &Graph, states: &[ColorState], v: NodeId) -> Vec<FaultScenario> {
    let current = ColorValue::from_option(states[v].color);
    let mut out = Vec::new();
    for c in sweep_colors(g.degree(v) as Color + 1) {
        for flag in [None, Some(false)] {
            if c == current && flag.is_none() {
                continue;
            }
            let patch = StatePatch { color: Some(c), is_final: flag, membership: None };
            out.push(FaultScenario::memory(v, patch));
        }
    }
    out
}

/// Every broadcast corruption from `v` that can matter to a neighbor: color
/// in `{⊥, 0..=top+1}` with `top` the larger of δ(v) and the largest
/// neighbor color, either flag.
pub fn broadcast_sweep(g: &Graph, states: &[ColorState], v: NodeId) -> Vec<FaultScenario> {
    let top = g
        .neighbors(v)
        .iter()
        .filter_map(|&w| states[w].color)
        .max()
        .unwrap_or(0)
        .max(g.degree(v) as Color);
    sweep_colors(top + 1)
        .flat_map(|c| [true, false].map(|f| FaultScenario::broadcast(v, StatePatch::both(c, f))))
        .collect()
}

/// Run `protocol` from seeded random states until it is legitimate.
pub fn legitimate_config<P: Protocol>(
    g: &Graph,
    protocol: &P,
    seed: u64,
    max_rounds: u64,
) -> Result<Vec<P::State>, EngineError> {
    let seeds = SeedTree::new(seed);
    let mut rng = seeds.child(0).rng();
    let states: Vec<P::State> = (0..g.n()).map(|v| protocol.random_state(g, v, &mut rng)).collect();
    let opts = RunOptions { max_rounds, ..RunOptions::default() };
    let outcome = run(g, Configuration::new(states), protocol, None, &seeds, &opts)?;
    Ok(outcome.config.states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, independent_degree, GraphSpec};
    use crate::protocols::{is_mis, Acol, Mis};

    fn star_config(d: usize) -> (Graph, Vec<ColorState>) {
        let g = generate(&GraphSpec::Star { d }).unwrap();
        let mut states = vec![ColorState::settled(0); d + 1];
        states[0] = ColorState::settled(1);
        (g, states)
    }

    #[test]
    fn star_conflict_sets() {
        let (g, states) = star_config(3);
        assert_eq!(n_conf(&g, &states, 0, 0).members, vec![1, 2, 3]);
        assert!(n_conf(&g, &states, 0, 2).is_empty());
        let worst = worst_case_scenarios(&g, &states, 0);
        assert_eq!(
            worst[0],
            (FaultClass::BroadcastFinal, FaultScenario::broadcast(0, StatePatch::both(ColorValue::Color(0), true)))
        );
        assert_eq!(worst.len(), 5);
    }

    #[test]
    fn ties_pick_smallest_color() {
        let g = generate(&GraphSpec::Star { d: 2 }).unwrap();
        let states = vec![ColorState::settled(0), ColorState::settled(2), ColorState::settled(1)];
        assert_eq!(worst_conflict(&g, &states, 0).color, 1);
    }

    #[test]
    fn legitimate_configs_from_random_states() {
        let star = generate(&GraphSpec::Star { d: 4 }).unwrap();
        let states = legitimate_config(&star, &Acol, 1, 10_000).unwrap();
        assert!(crate::protocols::is_legitimate_acol(&star, &states));
        assert!(states[0].color.unwrap() <= 4);

        let k3 = generate(&GraphSpec::Complete { n: 3 }).unwrap();
        let states = legitimate_config(&k3, &Acol, 2, 10_000).unwrap();
        let mut colors: Vec<_> = states.iter().map(|s| s.color.unwrap()).collect();
        colors.sort();
        assert_eq!(colors, vec![0, 1, 2]);

        let gnp = generate(&GraphSpec::Gnp { n: 50, p: 0.1, seed: 3 }).unwrap();
        let states = legitimate_config(&gnp, &Mis, 3, 10_000).unwrap();
        assert!(is_mis(&gnp, &states));
    }

    #[test]
    fn conflict_sets_fit_in_independent_degree_on_unit_disc() {
        let g = generate(&GraphSpec::UnitDisc { n: 200, radius: 0.08, seed: 7 }).unwrap();
        let states = legitimate_config(&g, &Acol, 11, 10_000).unwrap();
        for v in 0..g.n() {
            let cap = independent_degree(&g, v).unwrap();
            let top = g.degree(v) as Color + 1;
            for c in 0..=top {
                let cs = n_conf(&g, &states, v, c);
                assert!(cs.len() <= cap, "node {v} color {c}");
                assert!(g.is_independent_set(&cs.members));
            }
        }
    }

    #[test]
    fn memory_sweep_skips_identity() {
        let (g, states) = star_config(2);
        let sweep = memory_sweep(&g, &states, 1);
        // colors ⊥,0,1,2 with two flag options, minus the no-op.
        assert_eq!(sweep.len(), 7);
        assert!(!sweep.contains(&FaultScenario::memory(1, StatePatch::color(ColorValue::Color(0)))));
    }

    #[test]
    fn scenarios_round_trip_through_toml_and_json() {
        let s = FaultScenario::broadcast(4, StatePatch::both(ColorValue::Bottom, true));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<FaultScenario>(&json).unwrap(), s);
        let m: FaultScenario =
            serde_json::from_str(r#"{"kind":"memory","node":2,"patch":{"color":3},"injection_round":5}"#).unwrap();
        assert_eq!(m.faulty_node(), 2);
        assert_eq!(m.injection_round, 5);
        assert!(serde_json::from_str::<FaultScenario>(r#"{"kind":"memory","node":2,"patch":{"colour":3}}"#).is_err());
    }
}

//! Shared-memory algorithms run under the synchronous scheduler: a randomized
//! maximal independent set, the max-free-color coloring, and the
//! conflict-only recoloring. Their broadcast is the full node state.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Color, NodeView, Protocol, ProtocolError, ProtocolKind, RadiusClaim};
use crate::faults::{ColorValue, FaultError, StatePatch};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MisState {
    In,
    Out,
}

pub fn mis_transition<R: RngCore + ?Sized>(state: MisState, neighbors: &[MisState], rng: &mut R) -> MisState {
    match state {
        MisState::In if neighbors.contains(&MisState::In) => MisState::Out,
        MisState::Out if neighbors.iter().all(|&s| s == MisState::Out) && rng.random_bool(0.5) => MisState::In,
        s => s,
    }
}

/// IN-set is independent and every OUT node has an IN neighbor.
pub fn is_mis(g: &Graph, states: &[MisState]) -> bool {
    (0..g.n()).all(|v| {
        let in_neighbor = g.neighbors(v).iter().any(|&w| states[w] == MisState::In);
        match states[v] {
            MisState::In => !in_neighbor,
            MisState::Out => in_neighbor,
        }
    })
}

/// `max({0..=palette} \ neighbor colors)`; `None` only when every color is used.
pub fn max_free_color(palette: usize, neighbors: &[Color]) -> Option<Color> {
    (0..=palette as Color).rev().find(|c| !neighbors.contains(c))
}

pub fn max_free_transition<R: RngCore + ?Sized>(
    color: Color,
    neighbors: &[Color],
    palette: usize,
    rng: &mut R,
) -> Color {
    match max_free_color(palette, neighbors) {
        Some(target) if target != color && rng.random_bool(0.5) => target,
        _ => color,
    }
}

/// A node sharing its color with a neighbor moves, with probability 1/2, to a
/// uniform color of `{0..=palette}` not used by any neighbor.
pub fn recolor_transition<R: RngCore + ?Sized>(
    color: Color,
    neighbors: &[Color],
    palette: usize,
    rng: &mut R,
) -> Color {
    if !neighbors.contains(&color) || !rng.random_bool(0.5) {
        return color;
    }
    let free: Vec<Color> = (0..=palette as Color).filter(|c| !neighbors.contains(c)).collect();
    if free.is_empty() {
        return color;
    }
    free[rng.random_range(0..free.len())]
}

pub fn is_proper_coloring(g: &Graph, colors: &[Color]) -> bool {
    let palette = g.max_degree() as Color;
    (0..g.n()).all(|v| colors[v] <= palette && g.neighbors(v).iter().all(|&w| colors[w] != colors[v]))
}

pub fn is_max_free_fixed_point(g: &Graph, colors: &[Color]) -> bool {
    let palette = g.max_degree();
    (0..g.n()).all(|v| {
        let used: Vec<Color> = g.neighbors(v).iter().map(|&w| colors[w]).collect();
        max_free_color(palette, &used) == Some(colors[v])
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mis;

impl Protocol for Mis {
    type State = MisState;
    type Message = MisState;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::A1
    }

    fn message(&self, state: &MisState) -> MisState {
        *state
    }

    fn transition(
        &self,
        _node: &NodeView,
        state: &MisState,
        inbox: &[MisState],
        rng: &mut dyn RngCore,
    ) -> Result<MisState, ProtocolError> {
        Ok(mis_transition(*state, inbox, rng))
    }

    fn is_legal(&self, g: &Graph, states: &[MisState]) -> bool {
        is_mis(g, states)
    }

    fn is_legitimate(&self, g: &Graph, states: &[MisState]) -> bool {
        is_mis(g, states)
    }

    fn radius_claim(&self) -> RadiusClaim {
        RadiusClaim::Hops(2)
    }

    fn random_state(&self, _g: &Graph, _v: NodeId, rng: &mut dyn RngCore) -> MisState {
        if rng.random_bool(0.5) {
            MisState::In
        } else {
            MisState::Out
        }
    }

    fn patch_state(&self, _g: &Graph, v: NodeId, state: &MisState, patch: &StatePatch) -> Result<MisState, FaultError> {
        patch_membership(v, state, patch)
    }

    fn patch_message(&self, _g: &Graph, v: NodeId, message: &MisState, patch: &StatePatch) -> Result<MisState, FaultError> {
        patch_membership(v, message, patch)
    }
}

fn patch_membership(v: NodeId, state: &MisState, patch: &StatePatch) -> Result<MisState, FaultError> {
    let reject = |field| Err(FaultError::PatchField { protocol: ProtocolKind::A1, field, node: v });
    if patch.color.is_some() {
        return reject("color");
    }
    if patch.is_final.is_some() {
        return reject("final");
    }
    Ok(patch.membership.unwrap_or(*state))
}

fn patch_palette_color(
    kind: ProtocolKind,
    g: &Graph,
    v: NodeId,
    color: Color,
    patch: &StatePatch,
) -> Result<Color, FaultError> {
    if patch.membership.is_some() {
        return Err(FaultError::PatchField { protocol: kind, field: "membership", node: v });
    }
    if patch.is_final.is_some() {
        return Err(FaultError::PatchField { protocol: kind, field: "final", node: v });
    }
    match patch.color {
        None => Ok(color),
        Some(ColorValue::Bottom) => Err(FaultError::InvalidColor { node: v, reason: "this protocol has no ⊥".into() }),
        Some(ColorValue::Color(c)) if c as usize > g.max_degree() => Err(FaultError::InvalidColor {
            node: v,
            reason: format!("color {c} outside the palette 0..={}", g.max_degree()),
        }),
        Some(ColorValue::Color(c)) => Ok(c),
    }
}

/// The max-free-color coloring: a node not holding the largest color unused
/// by its neighbors moves to it with probability 1/2.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxFreeColoring;

impl Protocol for MaxFreeColoring {
    type State = Color;
    type Message = Color;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::A2
    }

    fn message(&self, state: &Color) -> Color {
        *state
    }

    fn transition(
        &self,
        node: &NodeView,
        state: &Color,
        inbox: &[Color],
        rng: &mut dyn RngCore,
    ) -> Result<Color, ProtocolError> {
        Ok(max_free_transition(*state, inbox, node.max_degree, rng))
    }

    fn is_legal(&self, g: &Graph, states: &[Color]) -> bool {
        is_proper_coloring(g, states)
    }

    fn is_legitimate(&self, g: &Graph, states: &[Color]) -> bool {
        is_max_free_fixed_point(g, states)
    }

    fn radius_claim(&self) -> RadiusClaim {
        RadiusClaim::MaxDegree
    }

    fn random_state(&self, g: &Graph, _v: NodeId, rng: &mut dyn RngCore) -> Color {
        rng.random_range(0..=g.max_degree() as Color)
    }

    fn patch_state(&self, g: &Graph, v: NodeId, state: &Color, patch: &StatePatch) -> Result<Color, FaultError> {
        patch_palette_color(ProtocolKind::A2, g, v, *state, patch)
    }

    fn patch_message(&self, g: &Graph, v: NodeId, message: &Color, patch: &StatePatch) -> Result<Color, FaultError> {
        patch_palette_color(ProtocolKind::A2, g, v, *message, patch)
    }
}

/// Conflict-only recoloring: only nodes sharing a color with a neighbor move.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConflictRecoloring;

impl Protocol for ConflictRecoloring {
    type State = Color;
    type Message = Color;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::A3
    }

    fn message(&self, state: &Color) -> Color {
        *state
    }

    fn transition(
        &self,
        node: &NodeView,
        state: &Color,
        inbox: &[Color],
        rng: &mut dyn RngCore,
    ) -> Result<Color, ProtocolError> {
        Ok(recolor_transition(*state, inbox, node.max_degree, rng))
    }

    fn is_legal(&self, g: &Graph, states: &[Color]) -> bool {
        is_proper_coloring(g, states)
    }

    fn is_legitimate(&self, g: &Graph, states: &[Color]) -> bool {
        is_proper_coloring(g, states)
    }

    fn radius_claim(&self) -> RadiusClaim {
        RadiusClaim::Hops(1)
    }

    fn random_state(&self, g: &Graph, _v: NodeId, rng: &mut dyn RngCore) -> Color {
        rng.random_range(0..=g.max_degree() as Color)
    }

    fn patch_state(&self, g: &Graph, v: NodeId, state: &Color, patch: &StatePatch) -> Result<Color, FaultError> {
        patch_palette_color(ProtocolKind::A3, g, v, *state, patch)
    }

    fn patch_message(&self, g: &Graph, v: NodeId, message: &Color, patch: &StatePatch) -> Result<Color, FaultError> {
        patch_palette_color(ProtocolKind::A3, g, v, *message, patch)
    }
}

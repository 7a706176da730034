//! Protocols as pluggable per-node transition functions.
//!
//! Each protocol states what a node broadcasts, how it moves given the
//! messages of its neighbors, and which configurations are legal and
//! legitimate. The shared-memory algorithms broadcast their whole state, which
//! lets one synchronous executor run all four.

mod acol;
mod classic;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::faults::{FaultError, StatePatch};
use crate::graph::{Graph, NodeId};

pub use acol::{acol_transition, is_legal_coloring, is_legitimate_acol, random_color, Acol, Color, ColorState};
pub use classic::{
    is_max_free_fixed_point, is_mis, is_proper_coloring, max_free_color, max_free_transition, mis_transition,
    recolor_transition, ConflictRecoloring, MaxFreeColoring, Mis, MisState,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("tabu set covers every color in 0..={degree}; no color left to draw")]
    PaletteExhausted { degree: usize },
    #[error("unknown protocol `{0}` (expected one of a1, a2, a3, acol)")]
    UnknownProtocol(String),
}

/// What a node knows about itself when it moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeView {
    pub id: NodeId,
    pub degree: usize,
    /// Δ of the whole graph (palette bound for the shared-memory colorings).
    pub max_degree: usize,
}

impl NodeView {
    pub fn of(g: &Graph, v: NodeId) -> Self {
        Self { id: v, degree: g.degree(v), max_degree: g.max_degree() }
    }
}

/// Contamination radius a protocol is known to respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusClaim {
    Hops(usize),
    /// Bounded only by Δ.
    MaxDegree,
}

impl RadiusClaim {
    pub fn resolve(self, g: &Graph) -> usize {
        match self {
            RadiusClaim::Hops(h) => h,
            RadiusClaim::MaxDegree => g.max_degree(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    A1,
    A2,
    A3,
    Acol,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [ProtocolKind::A1, ProtocolKind::A2, ProtocolKind::A3, ProtocolKind::Acol];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::A1 => "a1",
            ProtocolKind::A2 => "a2",
            ProtocolKind::A3 => "a3",
            ProtocolKind::Acol => "acol",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ProtocolError::UnknownProtocol(s.to_string()))
    }
}

pub trait Protocol: Send + Sync {
    type State: Clone + PartialEq + fmt::Debug + Send + Sync + Serialize;
    type Message: Clone + PartialEq + fmt::Debug + Send + Sync + Serialize;

    fn kind(&self) -> ProtocolKind;

    /// The payload a node in `state` broadcasts. Must depend on `state` only.
    fn message(&self, state: &Self::State) -> Self::Message;

    /// One synchronous move. `inbox` holds one message per neighbor, in
    /// adjacency order.
    fn transition(
        &self,
        node: &NodeView,
        state: &Self::State,
        inbox: &[Self::Message],
        rng: &mut dyn RngCore,
    ) -> Result<Self::State, ProtocolError>;

    fn is_legal(&self, g: &Graph, states: &[Self::State]) -> bool;

    /// Legitimate configurations are silent: no node moves from them.
    fn is_legitimate(&self, g: &Graph, states: &[Self::State]) -> bool;

    fn radius_claim(&self) -> RadiusClaim;

    /// Arbitrary initial state, used for stabilization runs.
    fn random_state(&self, g: &Graph, v: NodeId, rng: &mut dyn RngCore) -> Self::State;

    fn patch_state(&self, g: &Graph, v: NodeId, state: &Self::State, patch: &StatePatch)
        -> Result<Self::State, FaultError>;

    fn patch_message(
        &self,
        g: &Graph,
        v: NodeId,
        message: &Self::Message,
        patch: &StatePatch,
    ) -> Result<Self::Message, FaultError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for kind in ProtocolKind::ALL {
            assert_eq!(kind.name().parse::<ProtocolKind>().unwrap(), kind);
        }
        assert_eq!("a9".parse::<ProtocolKind>(), Err(ProtocolError::UnknownProtocol("a9".into())));
    }
}

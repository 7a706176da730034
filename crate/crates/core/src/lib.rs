//! Fault containment in self-stabilizing graph algorithms.
//!
//! The crate runs synchronous distributed protocols (a randomized MIS, two
//! shared-memory colorings and a message-passing (Δ+1)-coloring) under a
//! single injected fault, measures how long recovery takes and how far it
//! spreads, and computes the absorbing-Markov-chain predictions for the same
//! quantities so the two can be compared.
//!
//! ```
//! use contain_core::markov::{message_chain, solve_absorbing};
//!
//! let solution = solve_absorbing(&message_chain(2).unwrap()).unwrap();
//! assert!((solution.expected_from("2").unwrap() - 8.0 / 3.0).abs() < 1e-12);
//! ```

pub mod engine;
pub mod experiments;
pub mod faults;
pub mod graph;
pub mod markov;
pub mod protocols;
pub mod seed;
pub mod stats;

pub use engine::{run, step, Configuration, EngineError, RoundRecord, RoundTrace, RunOptions, RunOutcome, TraceLevel};
pub use experiments::{ExperimentError, TrialOptions, TrialResult, TrialSummary};
pub use faults::{ColorValue, ConflictSet, FaultClass, FaultError, FaultKind, FaultScenario, StatePatch};
pub use graph::{Graph, GraphError, GraphSpec, NodeId};
pub use markov::{AbsorbingChain, ChainSolution, MarkovError};
pub use protocols::{
    Acol, Color, ColorState, ConflictRecoloring, MaxFreeColoring, Mis, MisState, Protocol, ProtocolError,
    ProtocolKind, RadiusClaim,
};
pub use seed::SeedTree;
pub use stats::MetricSummary;

//! Experiment configuration files (TOML, `format = 1`).

use std::fs;
use std::path::{Path, PathBuf};

use contain_core::experiments::ContainmentCap;
use contain_core::{FaultScenario, Graph, GraphSpec, NodeId, ProtocolKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioFamily {
    /// At each selected node, the broadcast `(c_f, true)` with the largest
    /// conflict set.
    WorstCaseBroadcast,
    /// At each selected node, every memory corruption.
    MemorySweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// The coloring the graph family is built around.
    Designated,
    /// Run the protocol from seeded random states until legitimate.
    Stabilize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Invariants {
    pub radius_cap: Option<usize>,
    pub containment_cap: Option<CapSetting>,
    #[serde(default)]
    pub sender_unchanged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapSetting {
    Fixed(usize),
    Named(NamedCap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCap {
    IndependentDegree,
}

impl Invariants {
    pub fn containment(&self) -> ContainmentCap {
        match self.containment_cap {
            None => ContainmentCap::Unchecked,
            Some(CapSetting::Fixed(k)) => ContainmentCap::Fixed(k),
            Some(CapSetting::Named(NamedCap::IndependentDegree)) => ContainmentCap::IndependentDegree,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub summary_json: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
    /// Full trace of trial 0 as JSON lines.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    format: u32,
    protocol: String,
    graph: toml::Table,
    trials: u64,
    seed: Option<u64>,
    #[serde(default = "default_max_rounds")]
    max_rounds: u64,
    initial: Option<InitialState>,
    scenario: Option<FaultScenario>,
    scenario_family: Option<ScenarioFamily>,
    nodes: Option<Vec<NodeId>>,
    #[serde(default)]
    invariants: Invariants,
    #[serde(default)]
    output: OutputPaths,
}

fn default_max_rounds() -> u64 {
    contain_core::engine::DEFAULT_MAX_ROUNDS
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioSource {
    Explicit(FaultScenario),
    Family(ScenarioFamily),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub graph: Graph,
    /// Set when the graph came from a generator rather than a file.
    pub spec: Option<GraphSpec>,
    pub graph_label: String,
    pub trials: u64,
    pub seed: u64,
    pub max_rounds: u64,
    pub initial: InitialState,
    pub scenario: ScenarioSource,
    /// Faulty nodes for a scenario family; all nodes when absent.
    pub nodes: Option<Vec<NodeId>>,
    pub invariants: Invariants,
    /// Output paths as written; see [`crate::output::resolve`].
    pub output: OutputPaths,
    /// Directory of the config file.
    pub base: PathBuf,
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for `{field}`: {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses a config; a relative `edge_list` path resolves against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if raw.format != FORMAT_VERSION {
            return Err(field_error("format", format!("unsupported version {} (expected 1)", raw.format)));
        }
        let protocol: ProtocolKind = raw.protocol.parse().map_err(|e| field_error("protocol", e))?;
        let seed = raw.seed.ok_or_else(|| field_error("seed", "missing (runs are always explicitly seeded)"))?;
        if raw.trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        if raw.max_rounds == 0 {
            return Err(field_error("max_rounds", "must be at least 1"));
        }

        let (graph, spec, graph_label) = load_graph(raw.graph, base)?;

        let scenario = match (raw.scenario, raw.scenario_family) {
            (Some(s), None) => {
                s.check(&graph).map_err(|e| field_error("scenario", e))?;
                ScenarioSource::Explicit(s)
            }
            (None, Some(f)) => {
                if protocol != ProtocolKind::Acol {
                    return Err(field_error("scenario_family", format!("only available for acol, not {protocol}")));
                }
                ScenarioSource::Family(f)
            }
            (Some(_), Some(_)) => return Err(field_error("scenario", "give either [scenario] or scenario_family")),
            (None, None) => return Err(field_error("scenario", "missing; give [scenario] or scenario_family")),
        };
        if let Some(nodes) = &raw.nodes {
            if let Some(&bad) = nodes.iter().find(|&&v| v >= graph.n()) {
                return Err(field_error("nodes", format!("node {bad} outside 0..{}", graph.n())));
            }
        }

        let initial = match raw.initial {
            Some(i) => i,
            None if spec.as_ref().and_then(GraphSpec::designated_coloring).is_some() && protocol != ProtocolKind::A1 => {
                InitialState::Designated
            }
            None => InitialState::Stabilize,
        };
        Ok(Self {
            protocol,
            graph,
            spec,
            graph_label,
            trials: raw.trials,
            seed,
            max_rounds: raw.max_rounds,
            initial,
            scenario,
            nodes: raw.nodes,
            invariants: raw.invariants,
            output: raw.output,
            base: base.to_path_buf(),
        })
    }
}

fn load_graph(table: toml::Table, base: &Path) -> Result<(Graph, Option<GraphSpec>, String), CliError> {
    if let Some(path) = table.get("edge_list") {
        if table.len() > 1 {
            return Err(field_error("graph", "`edge_list` cannot be combined with generator parameters"));
        }
        let path = path.as_str().ok_or_else(|| field_error("graph.edge_list", "expected a path string"))?;
        let full = base.join(path);
        let file = fs::File::open(&full).map_err(|e| field_error("graph.edge_list", format!("{}: {e}", full.display())))?;
        let g = Graph::read_edge_list(std::io::BufReader::new(file)).map_err(|e| field_error("graph.edge_list", e))?;
        return Ok((g, None, format!("edge_list:{path}")));
    }
    let spec: GraphSpec = toml::Value::Table(table).try_into().map_err(|e| field_error("graph", e))?;
    let g = contain_core::graph::generate(&spec).map_err(|e| field_error("graph", e))?;
    let label = spec.family_name().to_string();
    Ok((g, Some(spec), label))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR: &str = r#"
format = 1
protocol = "acol"
trials = 10
seed = 3
scenario_family = "worst-case-broadcast"

[graph]
family = "star"
d = 5
"#;

    #[test]
    fn minimal_family_config() {
        let cfg = ExperimentConfig::parse(STAR, Path::new(".")).unwrap();
        assert_eq!(cfg.protocol, ProtocolKind::Acol);
        assert_eq!(cfg.graph.n(), 6);
        assert_eq!(cfg.initial, InitialState::Designated);
        assert_eq!(cfg.scenario, ScenarioSource::Family(ScenarioFamily::WorstCaseBroadcast));
        assert_eq!(cfg.max_rounds, 10_000);
    }

    #[test]
    fn explicit_scenario_and_invariants() {
        let text = r#"
format = 1
protocol = "a3"
trials = 5
seed = 1
initial = "stabilize"

[graph]
family = "gnp"
n = 20
p = 0.2
seed = 4

[scenario]
kind = "memory"
node = 3
patch = { color = 0 }

[invariants]
radius_cap = 1
containment_cap = "independent_degree"
"#;
        let cfg = ExperimentConfig::parse(text, Path::new(".")).unwrap();
        assert!(matches!(cfg.scenario, ScenarioSource::Explicit(s) if s.faulty_node() == 3));
        assert_eq!(cfg.invariants.radius_cap, Some(1));
        assert_eq!(cfg.invariants.containment(), ContainmentCap::IndependentDegree);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = STAR.replace("\"acol\"", "\"a9\"");
        let err = ExperimentConfig::parse(&bad, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("`protocol`"), "{err}");

        let unseeded = STAR.replace("seed = 3\n", "");
        let err = ExperimentConfig::parse(&unseeded, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("`seed`"), "{err}");

        let bad_p = STAR.replace("family = \"star\"\nd = 5", "family = \"gnp\"\nn = 5\np = 1.5\nseed = 0");
        let err = ExperimentConfig::parse(&bad_p, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");

        let v2 = STAR.replace("format = 1", "format = 2");
        assert!(ExperimentConfig::parse(&v2, Path::new(".")).is_err());
    }
}

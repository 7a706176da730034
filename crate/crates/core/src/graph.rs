//! Undirected simple graphs, seeded generators for the topologies used in
//! the experiments, and exact independent-degree computation.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// Default cap on `|N(v)|` for the exact independent-set search.
pub const DEFAULT_NEIGHBORHOOD_CAP: usize = 30;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("neighborhood of node {node} has {size} nodes, above the exact-search cap of {cap}")]
    NeighborhoodTooLarge { node: NodeId, size: usize, cap: usize },
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph on nodes `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges are merged; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn empty(n: usize) -> Self {
        Self { adjacency: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// Δ: the maximum degree (0 for the empty graph).
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// BFS hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in self.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Nodes within `radius` hops of `v`, including `v`, sorted.
    pub fn ball(&self, v: NodeId, radius: usize) -> Vec<NodeId> {
        self.distances_from(v)
            .iter()
            .enumerate()
            .filter_map(|(w, d)| d.filter(|&d| d <= radius).map(|_| w))
            .collect()
    }

    /// Subgraph induced by `nodes`, relabelled `0..nodes.len()` in the given order.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in nodes.iter().enumerate() {
            index[v] = i;
        }
        let edges = nodes.iter().enumerate().flat_map(|(i, &v)| {
            let index = &index;
            self.neighbors(v)
                .iter()
                .filter_map(move |&w| (index[w] != usize::MAX && index[w] > i).then_some((i, index[w])))
        });
        Graph::from_edges(nodes.len(), edges.collect::<Vec<_>>()).expect("induced subgraph is simple")
    }

    pub fn is_independent_set(&self, nodes: &[NodeId]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }

    /// Writes the edge list: a `format=1` line, an `n=<count>` header, then one `u v` per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut text = String::new();
        writeln!(text, "format=1").ok();
        writeln!(text, "n={}", self.n()).ok();
        for (u, v) in self.edges() {
            writeln!(text, "{u} {v}").ok();
        }
        out.write_all(text.as_bytes())
    }

    /// Parses the format written by [`Graph::write_edge_list`]. The `format=1`
    /// line is optional; blank lines and `#` comments are ignored.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self, GraphError> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(version) = line.strip_prefix("format=") {
                if version.trim() != "1" {
                    return Err(GraphError::Parse { line: lineno, reason: format!("unsupported format {version}") });
                }
                continue;
            }
            if let Some(count) = line.strip_prefix("n=") {
                let parsed = count
                    .trim()
                    .parse()
                    .map_err(|_| GraphError::Parse { line: lineno, reason: format!("bad node count `{count}`") })?;
                n = Some(parsed);
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GraphError::Parse { line: lineno, reason: "expected `u v`".into() });
            };
            let parse = |s: &str| {
                s.parse::<NodeId>()
                    .map_err(|_| GraphError::Parse { line: lineno, reason: format!("bad node id `{s}`") })
            };
            edges.push((parse(a)?, parse(b)?));
        }
        let n = n.ok_or(GraphError::Parse { line: 0, reason: "missing `n=<count>` header".into() })?;
        Graph::from_edges(n, edges)
    }
}

/// Generator description. Every family is a pure function of its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    /// Center `0` joined to leaves `1..=d`.
    Star { d: usize },
    Path { n: usize },
    Complete { n: usize },
    Gnp { n: usize, p: f64, seed: u64 },
    /// `n` uniform points in the unit square, edge iff distance `<= radius`.
    UnitDisc { n: usize, radius: f64, seed: u64 },
    /// The embedded graph `h` on nodes `0..|h|` plus a hub node `|h|` adjacent to all of them.
    HubOverH { h: Box<GraphSpec> },
    /// Path spine `0..=delta` with support trees; see [`cascade_path`].
    CascadePath { delta: usize },
}

impl GraphSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |field, reason: &str| Err(GraphError::InvalidParameter { field, reason: reason.to_string() });
        match self {
            GraphSpec::Star { d: 0 } => invalid("d", "must be at least 1"),
            GraphSpec::Path { n } | GraphSpec::Complete { n } if *n == 0 => invalid("n", "must be at least 1"),
            GraphSpec::Gnp { n, p, .. } => {
                if *n == 0 {
                    invalid("n", "must be at least 1")
                } else if !(0.0..=1.0).contains(p) {
                    invalid("p", "must lie in [0, 1]")
                } else {
                    Ok(())
                }
            }
            GraphSpec::UnitDisc { n, radius, .. } => {
                if *n == 0 {
                    invalid("n", "must be at least 1")
                } else if !(radius.is_finite() && *radius > 0.0) {
                    invalid("radius", "must be finite and > 0")
                } else {
                    Ok(())
                }
            }
            GraphSpec::HubOverH { h } => h.validate(),
            GraphSpec::CascadePath { delta } if *delta < 2 => invalid("delta", "must be at least 2"),
            _ => Ok(()),
        }
    }

    /// A legitimate coloring the family is built around, if it has one:
    /// the star's center gets 1 and every leaf 0; `cascade_path` gets its
    /// descending spine coloring.
    pub fn designated_coloring(&self) -> Option<Vec<u32>> {
        match self {
            GraphSpec::Star { d } => {
                let mut colors = vec![0; d + 1];
                colors[0] = 1;
                Some(colors)
            }
            GraphSpec::CascadePath { delta } => Some(cascade_path(*delta).1),
            _ => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GraphSpec::Star { .. } => "star",
            GraphSpec::Path { .. } => "path",
            GraphSpec::Complete { .. } => "complete",
            GraphSpec::Gnp { .. } => "gnp",
            GraphSpec::UnitDisc { .. } => "unit_disc",
            GraphSpec::HubOverH { .. } => "hub_over_h",
            GraphSpec::CascadePath { .. } => "cascade_path",
        }
    }
}

pub fn generate(spec: &GraphSpec) -> Result<Graph, GraphError> {
    spec.validate()?;
    let graph = match spec {
        GraphSpec::Star { d } => Graph::from_edges(d + 1, (1..=*d).map(|leaf| (0, leaf)))?,
        GraphSpec::Path { n } => Graph::from_edges(*n, (1..*n).map(|v| (v - 1, v)))?,
        GraphSpec::Complete { n } => {
            Graph::from_edges(*n, (0..*n).flat_map(|u| (u + 1..*n).map(move |v| (u, v))))?
        }
        GraphSpec::Gnp { n, p, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut edges = Vec::new();
            for u in 0..*n {
                for v in u + 1..*n {
                    if rng.random_bool(*p) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(*n, edges)?
        }
        GraphSpec::UnitDisc { n, radius, seed } => {
            let points = unit_square_points(*n, *seed);
            let r2 = radius * radius;
            let mut edges = Vec::new();
            for u in 0..*n {
                for v in u + 1..*n {
                    let (dx, dy) = (points[u].0 - points[v].0, points[u].1 - points[v].1);
                    if dx * dx + dy * dy <= r2 {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(*n, edges)?
        }
        GraphSpec::HubOverH { h } => {
            let inner = generate(h)?;
            let hub = inner.n();
            let edges: Vec<_> = inner.edges().chain((0..hub).map(|v| (v, hub))).collect();
            Graph::from_edges(hub + 1, edges)?
        }
        GraphSpec::CascadePath { delta } => cascade_path(*delta).0,
    };
    Ok(graph)
}

/// Seeded uniform points in the unit square, as used by the `unit_disc` family.
pub fn unit_square_points(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
}

/// A path spine `p_0 .. p_delta` (nodes `0..=delta`) together with a coloring
/// that is a fixed point of the max-free-color rule over the palette
/// `{0..delta}`.
///
/// `p_0` is colored `delta` and `p_k` is colored `delta - k`. Every color above
/// `p_k`'s own that is not supplied by `p_{k-1}` is supplied by a support tree
/// hanging off `p_k`: a support root of color `y` has children that are
/// support roots of colors `y+1..=delta`. Maximum degree is exactly `delta`.
pub fn cascade_path(delta: usize) -> (Graph, Vec<u32>) {
    struct Builder {
        edges: Vec<(NodeId, NodeId)>,
        colors: Vec<u32>,
    }
    impl Builder {
        fn node(&mut self, color: usize) -> NodeId {
            self.colors.push(color as u32);
            self.colors.len() - 1
        }
        fn support(&mut self, color: usize, parent: NodeId, delta: usize) {
            let root = self.node(color);
            self.edges.push((parent, root));
            for child in color + 1..=delta {
                self.support(child, root, delta);
            }
        }
    }

    let mut b = Builder { edges: Vec::new(), colors: Vec::new() };
    for k in 0..=delta {
        b.node(delta - k);
        if k > 0 {
            b.edges.push((k - 1, k));
        }
    }
    for k in 2..=delta {
        for color in delta + 2 - k..=delta {
            b.support(color, k, delta);
        }
    }
    let n = b.colors.len();
    (Graph::from_edges(n, b.edges).expect("cascade path is simple"), b.colors)
}

/// δ_i(v): size of a maximum independent set of the subgraph induced by `N(v)`,
/// with the default neighborhood cap.
pub fn independent_degree(g: &Graph, v: NodeId) -> Result<usize, GraphError> {
    independent_degree_capped(g, v, DEFAULT_NEIGHBORHOOD_CAP)
}

pub fn independent_degree_capped(g: &Graph, v: NodeId, cap: usize) -> Result<usize, GraphError> {
    let nbrs = g.neighbors(v);
    let cap = cap.min(64);
    if nbrs.len() > cap {
        return Err(GraphError::NeighborhoodTooLarge { node: v, size: nbrs.len(), cap });
    }
    // Adjacency inside N(v) as bitmasks over neighbor positions.
    let masks: Vec<u64> = nbrs
        .iter()
        .map(|&u| {
            nbrs.iter()
                .enumerate()
                .filter(|&(_, &w)| g.has_edge(u, w))
                .fold(0u64, |m, (j, _)| m | (1 << j))
        })
        .collect();
    let all = if nbrs.len() == 64 { u64::MAX } else { (1u64 << nbrs.len()) - 1 };
    let mut best = 0;
    max_independent(&masks, all, 0, &mut best);
    Ok(best)
}

fn max_independent(masks: &[u64], candidates: u64, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    let v = candidates.trailing_zeros() as usize;
    let bit = 1u64 << v;
    // A vertex with no remaining neighbors is always taken.
    if masks[v] & candidates == 0 {
        max_independent(masks, candidates & !bit, size + 1, best);
        return;
    }
    max_independent(masks, candidates & !bit & !masks[v], size + 1, best);
    max_independent(masks, candidates & !bit, size, best);
}

/// Δ_i(G) = max over v of δ_i(v).
pub fn max_independent_degree(g: &Graph) -> Result<usize, GraphError> {
    (0..g.n()).try_fold(0, |acc, v| Ok(acc.max(independent_degree(g, v)?)))
}

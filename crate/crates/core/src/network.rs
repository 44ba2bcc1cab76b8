//! The problem model: a directed acyclic multigraph with declared sources,
//! sinks and demands, rate normalization through virtual nodes, and the
//! sinks-first topological ordering used by the graph transformation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot parse problem: {0}")]
    Parse(String),
    #[error("graph contains a directed cycle")]
    CyclicGraph,
    #[error("sink {sink} demands source index {demand} but only {sources} sources exist")]
    DanglingDemand { sink: u64, demand: usize, sources: usize },
    #[error("duplicate edge id {0:?}")]
    DuplicateEdgeId(String),
    #[error("edge {edge:?} references unknown node {node}")]
    UnknownNode { edge: String, node: u64 },
    #[error("{role} declaration references unknown node {node}")]
    UnknownEndpoint { role: &'static str, node: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Node identifier as it appears in problem files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Edge identifier; parallel edges are distinguished by id only.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDecl {
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkDecl {
    pub node: NodeId,
    /// 1-based index into the source list.
    pub demand: usize,
}

/// Canonical problem file layout; field order is the canonical output order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct ProblemDoc {
    nodes: Vec<NodeId>,
    edges: Vec<Edge>,
    sources: Vec<SourceDecl>,
    sinks: Vec<SinkDecl>,
}

/// A validated network coding problem. Real edges only; the virtual
/// per-source input edge e(s_i) and per-sink output edge e(t_j) are
/// materialized with reserved ids so downstream algorithms can address them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
    pub sources: Vec<SourceDecl>,
    pub sinks: Vec<SinkDecl>,
    in_edges: BTreeMap<NodeId, Vec<usize>>,
    out_edges: BTreeMap<NodeId, Vec<usize>>,
}

impl Problem {
    pub fn new(
        nodes: Vec<NodeId>,
        edges: Vec<Edge>,
        sources: Vec<SourceDecl>,
        sinks: Vec<SinkDecl>,
    ) -> Result<Problem, NetworkError> {
        let node_set: BTreeSet<NodeId> = nodes.iter().copied().collect();
        let mut ids = HashSet::new();
        for e in &edges {
            if !ids.insert(e.id.clone()) {
                return Err(NetworkError::DuplicateEdgeId(e.id.0.clone()));
            }
            for node in [e.tail, e.head] {
                if !node_set.contains(&node) {
                    return Err(NetworkError::UnknownNode {
                        edge: e.id.0.clone(),
                        node: node.0,
                    });
                }
            }
        }
        for s in &sources {
            if !node_set.contains(&s.node) {
                return Err(NetworkError::UnknownEndpoint { role: "source", node: s.node.0 });
            }
        }
        for t in &sinks {
            if !node_set.contains(&t.node) {
                return Err(NetworkError::UnknownEndpoint { role: "sink", node: t.node.0 });
            }
            if t.demand == 0 || t.demand > sources.len() {
                return Err(NetworkError::DanglingDemand {
                    sink: t.node.0,
                    demand: t.demand,
                    sources: sources.len(),
                });
            }
        }
        let mut nodes: Vec<NodeId> = node_set.into_iter().collect();
        nodes.sort();
        let mut in_edges: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut out_edges: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for n in &nodes {
            in_edges.insert(*n, Vec::new());
            out_edges.insert(*n, Vec::new());
        }
        for (i, e) in edges.iter().enumerate() {
            out_edges.get_mut(&e.tail).unwrap().push(i);
            in_edges.get_mut(&e.head).unwrap().push(i);
        }
        let problem = Problem {
            nodes,
            edges,
            sources,
            sinks,
            in_edges,
            out_edges,
        };
        problem.topo_sort()?; // acyclicity witness
        Ok(problem)
    }

    pub fn from_json_str(text: &str) -> Result<Problem, NetworkError> {
        let doc: ProblemDoc =
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
        Problem::new(doc.nodes, doc.edges, doc.sources, doc.sinks)
    }

    pub fn load(path: &Path) -> Result<Problem, NetworkError> {
        let text = std::fs::read_to_string(path)?;
        Problem::from_json_str(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ProblemDoc {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            sources: self.sources.clone(),
            sinks: self.sinks.clone(),
        })
        .expect("problem serialization")
    }

    pub fn in_edges(&self, v: NodeId) -> &[usize] {
        self.in_edges.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn out_edges(&self, v: NodeId) -> &[usize] {
        self.out_edges.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge_index(&self, id: &EdgeId) -> Option<usize> {
        self.edges.iter().position(|e| &e.id == id)
    }

    /// Reserved id of the virtual incoming edge of source i (1-based).
    pub fn source_virtual_edge(i: usize) -> EdgeId {
        EdgeId(format!("v_src_{}", i))
    }

    /// Reserved id of the virtual outgoing edge of sink j (1-based).
    pub fn sink_virtual_edge(j: usize) -> EdgeId {
        EdgeId(format!("v_snk_{}", j))
    }

    /// True when every declared source sits on a node with no inputs and no
    /// other role, and symmetrically for sinks.
    pub fn is_normalized(&self) -> bool {
        let mut seen_sources: HashSet<NodeId> = HashSet::new();
        let mut source_nodes: HashSet<NodeId> = HashSet::new();
        for s in &self.sources {
            if !self.in_edges(s.node).is_empty() || !seen_sources.insert(s.node) {
                return false;
            }
            source_nodes.insert(s.node);
        }
        let mut seen_sinks: HashSet<NodeId> = HashSet::new();
        for t in &self.sinks {
            if !self.out_edges(t.node).is_empty()
                || !seen_sinks.insert(t.node)
                || source_nodes.contains(&t.node)
            {
                return false;
            }
        }
        true
    }

    /// Splits every multi-rate or otherwise non-boundary source/sink
    /// declaration onto a fresh virtual node with a single connecting edge.
    /// Identity on already-normalized problems; always idempotent.
    pub fn normalize_rates(&self) -> Problem {
        if self.is_normalized() {
            return self.clone();
        }
        let mut nodes = self.nodes.clone();
        let mut edges = self.edges.clone();
        let mut next_node = self.nodes.iter().map(|n| n.0).max().unwrap_or(0) + 1;

        let mut source_count: HashMap<NodeId, usize> = HashMap::new();
        for s in &self.sources {
            *source_count.entry(s.node).or_insert(0) += 1;
        }
        let sink_nodes: HashSet<NodeId> = self.sinks.iter().map(|t| t.node).collect();

        let mut sources = Vec::new();
        for (i, s) in self.sources.iter().enumerate() {
            let clean = self.in_edges(s.node).is_empty()
                && source_count[&s.node] == 1
                && !sink_nodes.contains(&s.node);
            if clean {
                sources.push(s.clone());
            } else {
                let fresh = NodeId(next_node);
                next_node += 1;
                nodes.push(fresh);
                edges.push(Edge {
                    id: EdgeId(format!("r_src_{}", i + 1)),
                    tail: fresh,
                    head: s.node,
                });
                sources.push(SourceDecl { node: fresh });
            }
        }

        let mut sink_count: HashMap<NodeId, usize> = HashMap::new();
        for t in &self.sinks {
            *sink_count.entry(t.node).or_insert(0) += 1;
        }
        let source_nodes: HashSet<NodeId> = self.sources.iter().map(|s| s.node).collect();
        let mut sinks = Vec::new();
        for (j, t) in self.sinks.iter().enumerate() {
            let clean = self.out_edges(t.node).is_empty()
                && sink_count[&t.node] == 1
                && !source_nodes.contains(&t.node);
            if clean {
                sinks.push(t.clone());
            } else {
                let fresh = NodeId(next_node);
                next_node += 1;
                nodes.push(fresh);
                edges.push(Edge {
                    id: EdgeId(format!("r_snk_{}", j + 1)),
                    tail: t.node,
                    head: fresh,
                });
                sinks.push(SinkDecl { node: fresh, demand: t.demand });
            }
        }

        Problem::new(nodes, edges, sources, sinks)
            .expect("normalization preserves validity")
    }

    /// Sinks-first topological order: initialize each node's counter to its
    /// out-degree, repeatedly emit a zero-count node and decrement the tails
    /// of its incoming edges. Zero-count nodes are seeded in ascending id
    /// order and served first-come-first-served, which keeps the order
    /// deterministic.
    pub fn topo_sort(&self) -> Result<TopoOrder, NetworkError> {
        let mut count: BTreeMap<NodeId, usize> = BTreeMap::new();
        for n in &self.nodes {
            count.insert(*n, self.out_edges(*n).len());
        }
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        for n in &self.nodes {
            if count[n] == 0 {
                queue.push_back(*n);
            }
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut incoming: Vec<&Edge> =
                self.in_edges(v).iter().map(|&i| &self.edges[i]).collect();
            incoming.sort_by(|a, b| a.id.cmp(&b.id));
            for e in incoming {
                let c = count.get_mut(&e.tail).unwrap();
                *c -= 1;
                if *c == 0 {
                    queue.push_back(e.tail);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(NetworkError::CyclicGraph);
        }
        Ok(TopoOrder { order })
    }

    /// All nodes reachable from `start` along directed edges (inclusive).
    pub fn reachable_from(&self, start: NodeId) -> HashSet<NodeId> {
        let mut seen = HashSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            for &i in self.out_edges(v) {
                stack.push(self.edges[i].head);
            }
        }
        seen
    }
}

/// A sinks-first topological ordering of the nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoOrder {
    pub order: Vec<NodeId>,
}

impl TopoOrder {
    /// Position of each node; earlier means closer to the sinks.
    pub fn positions(&self) -> HashMap<NodeId, usize> {
        self.order.iter().enumerate().map(|(i, n)| (*n, i)).collect()
    }
}

//! Graph transformation into sink-rooted trees.
//!
//! Visiting nodes from sinks to sources, every node with more than one
//! outgoing edge is split into one copy per output, each copy inheriting a
//! fresh copy of every input edge. The result is one tree per sink whose
//! leaves are source copies, in bijection with the source-to-sink paths of
//! the original network. All replica bookkeeping needed later (copies of
//! nodes and edges, aligned orderings, per-node leaf descendants) is
//! materialized here.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::network::{EdgeId, NodeId, Problem, TopoOrder};

/// A node copy in the transformed forest.
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub original: NodeId,
    /// 1-based tree index, in sink order.
    pub tree: usize,
    /// 1-based copy index among copies of `original` within this tree,
    /// in depth-first discovery order from the root.
    pub copy: usize,
    pub out_edge: Option<usize>,
    /// Incoming tree edges, sorted by original edge id.
    pub in_edges: Vec<usize>,
}

/// An edge copy in the transformed forest.
#[derive(Clone, Debug)]
pub struct TreeEdge {
    /// Index into `Problem::edges`.
    pub original: usize,
    pub tree: usize,
    pub tail: usize,
    pub head: usize,
    /// Position of this copy within the replica list of its original edge.
    pub replica_pos: usize,
}

/// A path-gain variable: the k-th copy of source i in tree j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafVar {
    pub source: u32,
    pub tree: u32,
    pub copy: u32,
    pub leaf: usize,
}

impl LeafVar {
    pub fn name(&self) -> String {
        format!("g{}_{}_{}", self.source, self.tree, self.copy)
    }
}

#[derive(Clone, Debug)]
pub struct Tree {
    pub root: usize,
    pub sink: NodeId,
    /// 1-based demanded source index.
    pub demand: usize,
}

/// The transformed network with replica indices.
#[derive(Clone, Debug)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
    pub leaf_vars: Vec<LeafVar>,
    /// Copies of each original node, ordered by (tree, discovery).
    replica_nodes: BTreeMap<NodeId, Vec<usize>>,
    /// Copies of each original edge, aligned with the replica order of the
    /// edge's head node.
    replica_edges: Vec<Vec<usize>>,
    /// Leaf variables (by index) below each tree node, grouped by source.
    h_sets: Vec<BTreeMap<u32, Vec<u32>>>,
    leaf_var_of_node: HashMap<usize, usize>,
}

impl Forest {
    pub fn source_count(&self) -> usize {
        self.leaf_vars
            .iter()
            .map(|lv| lv.source as usize)
            .max()
            .unwrap_or(0)
    }

    /// Copies of an original node, canonical order.
    pub fn node_replicas(&self, v: NodeId) -> &[usize] {
        self.replica_nodes.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Copies of an original edge (by problem edge index), canonical order.
    pub fn edge_replicas(&self, e: usize) -> &[usize] {
        &self.replica_edges[e]
    }

    /// Leaf variables of source i with a path to tree node `v`.
    pub fn h_set(&self, v: usize, source: u32) -> &[u32] {
        self.h_sets[v]
            .get(&source)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn h_sources(&self, v: usize) -> impl Iterator<Item = u32> + '_ {
        self.h_sets[v].keys().copied()
    }

    pub fn leaf_var_index(&self, node: usize) -> Option<usize> {
        self.leaf_var_of_node.get(&node).copied()
    }

    /// The incoming copy of original edge `e` at node copy `v`, if any.
    pub fn in_copy_of(&self, v: usize, e: usize) -> Option<usize> {
        self.nodes[v]
            .in_edges
            .iter()
            .copied()
            .find(|&te| self.edges[te].original == e)
    }

    /// Original edge-id path (source to sink) realized by a leaf variable.
    pub fn leaf_path<'a>(&self, problem: &'a Problem, lv: &LeafVar) -> Vec<&'a EdgeId> {
        let mut path = Vec::new();
        let mut node = lv.leaf;
        while let Some(te) = self.nodes[node].out_edge {
            path.push(&problem.edges[self.edges[te].original].id);
            node = self.edges[te].head;
        }
        path
    }

    pub fn to_json(&self, problem: &Problem) -> serde_json::Value {
        let two_source = problem.sources.len() <= 2;
        let trees: Vec<serde_json::Value> = self
            .trees
            .iter()
            .enumerate()
            .map(|(j, t)| {
                serde_json::json!({
                    "tree": j + 1,
                    "sink": t.sink,
                    "demand": t.demand,
                    "root": self.node_json(problem, t.root),
                })
            })
            .collect();
        let leaves: Vec<serde_json::Value> = self
            .leaf_vars
            .iter()
            .map(|lv| {
                let path: Vec<String> = self
                    .leaf_path(problem, lv)
                    .iter()
                    .map(|id| id.0.clone())
                    .collect();
                let mut doc = serde_json::json!({
                    "name": lv.name(),
                    "source": lv.source,
                    "tree": lv.tree,
                    "copy": lv.copy,
                    "path": path,
                });
                if two_source {
                    doc["alias"] = serde_json::Value::String(alias_name(self, lv));
                }
                doc
            })
            .collect();
        serde_json::json!({ "trees": trees, "leaf_vars": leaves })
    }

    fn node_json(&self, problem: &Problem, node: usize) -> serde_json::Value {
        let n = &self.nodes[node];
        let children: Vec<serde_json::Value> = n
            .in_edges
            .iter()
            .map(|&te| {
                let e = &self.edges[te];
                serde_json::json!({
                    "edge": problem.edges[e.original].id,
                    "child": self.node_json(problem, e.tail),
                })
            })
            .collect();
        serde_json::json!({
            "original": n.original,
            "copy": n.copy,
            "children": children,
        })
    }
}

/// a/b alias used for two-source fixtures: source 1 leaves become a1, a2, ...
/// across trees in order, source 2 leaves b1, b2, ...
fn alias_name(forest: &Forest, lv: &LeafVar) -> String {
    let letter = if lv.source == 1 { 'a' } else { 'b' };
    let mut n = 0;
    for other in &forest.leaf_vars {
        if other.source == lv.source {
            n += 1;
            if other == lv {
                break;
            }
        }
    }
    format!("{}{}", letter, n)
}

#[derive(Serialize)]
struct Split {
    orig: usize,
    tail: usize,
    head: usize,
}

/// Algorithm 2 on the evolving graph, then tree extraction and bookkeeping.
/// Requires a normalized problem and its sinks-first order.
pub fn transform(problem: &Problem, topo: &TopoOrder) -> Forest {
    // Working copies: instance graph that gets rewritten in place.
    let mut inst_orig: Vec<NodeId> = Vec::new();
    let mut inst_of: HashMap<NodeId, usize> = HashMap::new();
    for n in &problem.nodes {
        inst_of.insert(*n, inst_orig.len());
        inst_orig.push(*n);
    }
    let mut edges: Vec<Split> = problem
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| Split {
            orig: i,
            tail: inst_of[&e.tail],
            head: inst_of[&e.head],
        })
        .collect();
    let mut edge_alive: Vec<bool> = vec![true; edges.len()];
    let mut outs: Vec<Vec<usize>> = vec![Vec::new(); inst_orig.len()];
    let mut ins: Vec<Vec<usize>> = vec![Vec::new(); inst_orig.len()];
    for (i, e) in edges.iter().enumerate() {
        outs[e.tail].push(i);
        ins[e.head].push(i);
    }

    for &v in &topo.order {
        let vi = inst_of[&v];
        let live_outs: Vec<usize> = outs[vi].iter().copied().filter(|&e| edge_alive[e]).collect();
        if live_outs.len() <= 1 {
            continue;
        }
        let live_ins: Vec<usize> = ins[vi].iter().copied().filter(|&e| edge_alive[e]).collect();
        for eo in live_outs {
            let copy = inst_orig.len();
            inst_orig.push(v);
            outs.push(vec![eo]);
            ins.push(Vec::new());
            edges[eo].tail = copy;
            for &ei in &live_ins {
                let id = edges.len();
                edges.push(Split {
                    orig: edges[ei].orig,
                    tail: edges[ei].tail,
                    head: copy,
                });
                edge_alive.push(true);
                outs[edges[ei].tail].push(id);
                ins[copy].push(id);
            }
        }
        for ei in live_ins {
            edge_alive[ei] = false;
        }
        // The old instance keeps no live edges; nothing points at it anymore.
        outs[vi].clear();
        ins[vi].clear();
    }

    // Extract the |T| sink-rooted trees; anything not reachable backwards
    // from a sink is a dead end and carries no constraints.
    let mut forest = Forest {
        trees: Vec::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        leaf_vars: Vec::new(),
        replica_nodes: BTreeMap::new(),
        replica_edges: vec![Vec::new(); problem.edges.len()],
        h_sets: Vec::new(),
        leaf_var_of_node: HashMap::new(),
    };

    let source_index: HashMap<NodeId, u32> = problem
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.node, i as u32 + 1))
        .collect();

    let mut copy_counter: HashMap<(NodeId, usize), usize> = HashMap::new();
    for (j, sink) in problem.sinks.iter().enumerate() {
        let tree = j + 1;
        let root_inst = inst_of[&sink.node];
        let mut leaf_count: HashMap<u32, u32> = HashMap::new();

        // Iterative depth-first walk from the root, children in original
        // edge-id order. A tree node is created when popped, so node indices
        // follow preorder and a child's whole subtree precedes its next
        // sibling: the k-indices of leaf variables depend on this.
        let root_node = forest.nodes.len();
        forest.trees.push(Tree {
            root: root_node,
            sink: sink.node,
            demand: sink.demand,
        });
        let mut stack: Vec<(usize, Option<(usize, usize)>)> = vec![(root_inst, None)];
        while let Some((inst, via)) = stack.pop() {
            let orig_node = inst_orig[inst];
            let node = forest.nodes.len();
            forest.nodes.push(TreeNode {
                original: orig_node,
                tree,
                copy: next_copy(&mut copy_counter, orig_node, tree),
                out_edge: None,
                in_edges: Vec::new(),
            });
            if let Some((parent, ei)) = via {
                let te = forest.edges.len();
                forest.edges.push(TreeEdge {
                    original: edges[ei].orig,
                    tree,
                    tail: node,
                    head: parent,
                    replica_pos: 0,
                });
                forest.nodes[node].out_edge = Some(te);
                forest.nodes[parent].in_edges.push(te);
            }
            let mut in_list: Vec<usize> = ins[inst]
                .iter()
                .copied()
                .filter(|&e| edge_alive[e])
                .collect();
            in_list.sort_by(|&a, &b| {
                problem.edges[edges[a].orig]
                    .id
                    .cmp(&problem.edges[edges[b].orig].id)
            });
            // Reverse push so the lexicographically first edge pops first.
            for ei in in_list.into_iter().rev() {
                stack.push((edges[ei].tail, Some((node, ei))));
            }
        }

        // Walk this tree's nodes (they were appended in DFS preorder) and
        // register leaf variables.
        for node in root_node..forest.nodes.len() {
            let is_leaf = forest.nodes[node].in_edges.is_empty();
            if !is_leaf {
                continue;
            }
            if let Some(&i) = source_index.get(&forest.nodes[node].original) {
                let k = leaf_count.entry(i).or_insert(0);
                *k += 1;
                let lv = LeafVar {
                    source: i,
                    tree: tree as u32,
                    copy: *k,
                    leaf: node,
                };
                forest.leaf_var_of_node.insert(node, forest.leaf_vars.len());
                forest.leaf_vars.push(lv);
            }
        }
    }

    // DFS preorder within each tree is the canonical replica order.
    for (idx, n) in forest.nodes.iter().enumerate() {
        forest.replica_nodes.entry(n.original).or_default().push(idx);
    }
    // Align each edge's replica list with its head node's replica order.
    for e in 0..problem.edges.len() {
        let head = problem.edges[e].head;
        let mut list = Vec::new();
        for &hn in forest.replica_nodes.get(&head).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(te) = forest.in_copy_of(hn, e) {
                list.push(te);
            }
        }
        for (pos, &te) in list.iter().enumerate() {
            forest.edges[te].replica_pos = pos;
        }
        forest.replica_edges[e] = list;
    }

    // Leaf descendants per node, grouped by source, bottom-up.
    forest.h_sets = vec![BTreeMap::new(); forest.nodes.len()];
    let mut order: Vec<usize> = (0..forest.nodes.len()).collect();
    // Children were appended after their parents, so reverse index order is
    // a valid bottom-up sweep.
    order.reverse();
    for node in order {
        if forest.nodes[node].in_edges.is_empty() {
            if let Some(lv) = forest.leaf_var_index(node) {
                let var = &forest.leaf_vars[lv];
                forest.h_sets[node]
                    .entry(var.source)
                    .or_default()
                    .push(lv as u32);
            }
            continue;
        }
        let mut merged: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &te in &forest.nodes[node].in_edges {
            let child = forest.edges[te].tail;
            for (i, lvs) in &forest.h_sets[child] {
                merged.entry(*i).or_default().extend(lvs.iter().copied());
            }
        }
        for lvs in merged.values_mut() {
            lvs.sort_unstable();
        }
        forest.h_sets[node] = merged;
    }

    forest
}

fn next_copy(counter: &mut HashMap<(NodeId, usize), usize>, node: NodeId, tree: usize) -> usize {
    let c = counter.entry((node, tree)).or_insert(0);
    *c += 1;
    *c
}

/// All directed paths from source i to sink j in the original network,
/// as edge-id sequences in lexicographic order. Used as an independent
/// oracle for the leaf-variable bijection.
pub fn enumerate_paths(problem: &Problem, source: usize, sink: usize) -> Vec<Vec<EdgeId>> {
    let from = problem.sources[source - 1].node;
    let to = problem.sinks[sink - 1].node;
    let mut paths = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    dfs_paths(problem, from, to, &mut current, &mut paths);
    paths
}

fn dfs_paths(
    problem: &Problem,
    at: NodeId,
    to: NodeId,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<EdgeId>>,
) {
    if at == to {
        out.push(current.iter().map(|&i| problem.edges[i].id.clone()).collect());
        return;
    }
    let mut outs: Vec<usize> = problem.out_edges(at).to_vec();
    outs.sort_by(|&a, &b| problem.edges[a].id.cmp(&problem.edges[b].id));
    for e in outs {
        current.push(e);
        dfs_paths(problem, problem.edges[e].head, to, current, out);
        current.pop();
    }
}

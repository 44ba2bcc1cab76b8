//! Deriving an implementable network code from a path-gain solution, and the
//! independent forward verifier.
//!
//! Every original edge gets two vectors: its coding vector (the mixture of
//! source symbols it carries) and a scaling vector with one scalar per copy
//! of the edge in the transformed forest. Walking nodes from sources to
//! sinks, the per-copy flows form a rank-one matrix whose first nonzero row
//! becomes the edge function; the coefficients read off that row are the
//! edge-to-edge gains actually deployed at the node.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equations::{build_edge_compat, build_no_interference, leaf_var_id};
use crate::forest::{transform, Forest};
use crate::galois::{FieldElem, FieldError, FieldSpec};
use crate::network::{EdgeId, NodeId, Problem};
use crate::poly::PolySystem;
use crate::solve::Solution;

#[derive(Debug, Error)]
pub enum RecoverError {
    #[error("assignment is not a solution of the path-gain system: {0}")]
    NotASolution(String),
    #[error("flow matrix of edge {edge} has two independent nonzero rows")]
    RankViolation { edge: String },
    #[error("solution does not assign path-gain variable {0}")]
    MissingAssignment(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cannot parse network code: {0}")]
    Parse(String),
}

/// Per-edge recovery state: the coding vector f_e and the per-copy scaling
/// vector c_e (aligned with the replica order of the edge's head).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeState {
    pub coding_vector: Vec<FieldElem>,
    pub scaling: Vec<FieldElem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeEntry {
    pub sink: NodeId,
    pub edge: EdgeId,
    pub value: FieldElem,
}

/// Edge-to-edge coefficients for every adjacent pair (virtual edges
/// included), per-sink decoding scalars, and the recovered edge functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkCode {
    pub field: FieldSpec,
    pub coeffs: BTreeMap<(EdgeId, EdgeId), FieldElem>,
    pub decode: Vec<DecodeEntry>,
    pub edge_functions: BTreeMap<EdgeId, Vec<FieldElem>>,
}

impl NetworkCode {
    pub fn coeff(&self, from: &EdgeId, to: &EdgeId) -> Option<&FieldElem> {
        self.coeffs.get(&(from.clone(), to.clone()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<serde_json::Value> = self
            .coeffs
            .iter()
            .map(|((from, to), v)| {
                serde_json::json!({"from": from, "to": to, "value": v.to_string()})
            })
            .collect();
        let decode: Vec<serde_json::Value> = self
            .decode
            .iter()
            .map(|d| serde_json::json!({"sink": d.sink, "edge": d.edge, "value": d.value.to_string()}))
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edge_functions
            .iter()
            .map(|(e, f)| {
                let coords: Vec<String> = f.iter().map(|x| x.to_string()).collect();
                serde_json::json!({"edge": e, "vector": coords})
            })
            .collect();
        serde_json::json!({
            "field": self.field.name(),
            "coeffs": coeffs,
            "decode": decode,
            "edges": edges,
        })
    }

    pub fn from_json_str(text: &str) -> Result<NetworkCode, RecoverError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RecoverError::Parse(e.to_string()))?;
        let field = FieldSpec::parse(doc["field"].as_str().ok_or_else(|| parse_err("field"))?)?;
        let mut coeffs = BTreeMap::new();
        for c in doc["coeffs"].as_array().ok_or_else(|| parse_err("coeffs"))? {
            let from = EdgeId(c["from"].as_str().ok_or_else(|| parse_err("from"))?.into());
            let to = EdgeId(c["to"].as_str().ok_or_else(|| parse_err("to"))?.into());
            let value = field.parse_elem(c["value"].as_str().ok_or_else(|| parse_err("value"))?)?;
            coeffs.insert((from, to), value);
        }
        let mut decode = Vec::new();
        for d in doc["decode"].as_array().ok_or_else(|| parse_err("decode"))? {
            decode.push(DecodeEntry {
                sink: NodeId(d["sink"].as_u64().ok_or_else(|| parse_err("sink"))?),
                edge: EdgeId(d["edge"].as_str().ok_or_else(|| parse_err("edge"))?.into()),
                value: field.parse_elem(d["value"].as_str().ok_or_else(|| parse_err("value"))?)?,
            });
        }
        let mut edge_functions = BTreeMap::new();
        if let Some(edges) = doc["edges"].as_array() {
            for e in edges {
                let id = EdgeId(e["edge"].as_str().ok_or_else(|| parse_err("edge"))?.into());
                let mut vector = Vec::new();
                for coord in e["vector"].as_array().ok_or_else(|| parse_err("vector"))? {
                    vector.push(field.parse_elem(coord.as_str().ok_or_else(|| parse_err("coord"))?)?);
                }
                edge_functions.insert(id, vector);
            }
        }
        Ok(NetworkCode { field, coeffs, decode, edge_functions })
    }
}

fn parse_err(what: &str) -> RecoverError {
    RecoverError::Parse(format!("missing or malformed {}", what))
}

/// Rebuilds the path-gain system for the given forest and evaluates the
/// assignment against it.
fn check_is_solution(
    problem: &Problem,
    forest: &Forest,
    solution: &Solution,
) -> Result<(), RecoverError> {
    for lv in &forest.leaf_vars {
        if !solution.assignment.contains_key(&leaf_var_id(lv)) {
            return Err(RecoverError::MissingAssignment(lv.name()));
        }
    }
    let mut equations = build_no_interference(forest, problem)
        .map_err(|e| RecoverError::NotASolution(e.to_string()))?;
    equations.extend(build_edge_compat(forest, problem));
    let vars = forest.leaf_vars.iter().map(leaf_var_id).collect();
    let system = PolySystem::new(vars, equations);
    if !solution.satisfies(&system) {
        for eq in &system.equations {
            let r = eq.poly.eval_idx(&solution.field, |v| {
                solution
                    .assignment
                    .get(v)
                    .map(|e| solution.field.index_of(e))
                    .unwrap_or(0)
            });
            if r != 0 {
                return Err(RecoverError::NotASolution(format!("{} != 0", eq.poly)));
            }
        }
    }
    Ok(())
}

/// Algorithm core: needs the normalized problem, its order, and the forest
/// built from it. `derive_code` is the convenience wrapper.
pub fn derive_states(
    problem: &Problem,
    forest: &Forest,
    solution: &Solution,
) -> Result<(NetworkCode, BTreeMap<EdgeId, EdgeState>), RecoverError> {
    check_is_solution(problem, forest, solution)?;
    let field = &solution.field;
    let n = problem.sources.len();
    let topo = problem.topo_sort().expect("validated problem");

    let leaf_value = |lv_idx: usize| -> u32 {
        let var = leaf_var_id(&forest.leaf_vars[lv_idx]);
        field.index_of(&solution.assignment[&var])
    };

    // Index form of f_e and c_e per original edge.
    let mut f: Vec<Option<Vec<u32>>> = vec![None; problem.edges.len()];
    let mut c: Vec<Vec<u32>> = vec![Vec::new(); problem.edges.len()];
    let mut coeffs: BTreeMap<(EdgeId, EdgeId), u32> = BTreeMap::new();

    let source_of: HashMap<NodeId, usize> = problem
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.node, i))
        .collect();
    let sink_of: HashMap<NodeId, usize> = problem
        .sinks
        .iter()
        .enumerate()
        .map(|(j, t)| (t.node, j))
        .collect();

    // Sources: unit coding vectors; scaling picks up the leaf gains.
    for (i, s) in problem.sources.iter().enumerate() {
        for &e in problem.out_edges(s.node) {
            let mut unit = vec![0u32; n];
            unit[i] = 1;
            f[e] = Some(unit);
            let mut scal = Vec::new();
            for &te in forest.edge_replicas(e) {
                let leaf = forest.edges[te].tail;
                let lv = forest
                    .leaf_var_index(leaf)
                    .expect("source copies are leaves");
                scal.push(leaf_value(lv));
            }
            c[e] = scal;
            coeffs.insert(
                (Problem::source_virtual_edge(i + 1), problem.edges[e].id.clone()),
                1,
            );
        }
    }

    // Interior sweep from sources toward sinks.
    for &v in topo.order.iter().rev() {
        if source_of.contains_key(&v) || sink_of.contains_key(&v) {
            continue;
        }
        let mut ins: Vec<usize> = problem.in_edges(v).to_vec();
        ins.sort_by(|&a, &b| problem.edges[a].id.cmp(&problem.edges[b].id));
        let mut outs: Vec<usize> = problem.out_edges(v).to_vec();
        outs.sort_by(|&a, &b| problem.edges[a].id.cmp(&problem.edges[b].id));
        for &e in &outs {
            let copies = forest.edge_replicas(e);
            // Row of the flow matrix per copy of e: the sum of the scaled
            // inputs arriving at that copy's tail.
            let mut rows: Vec<Vec<u32>> = Vec::with_capacity(copies.len());
            let mut row_gains: Vec<Vec<u32>> = Vec::with_capacity(copies.len());
            for &te in copies {
                let tail_copy = forest.edges[te].tail;
                let mut row = vec![0u32; n];
                let mut gains = Vec::with_capacity(ins.len());
                for &ein in &ins {
                    let in_copy = forest
                        .in_copy_of(tail_copy, ein)
                        .expect("copies inherit every input");
                    let pos = forest.edges[in_copy].replica_pos;
                    let scale = c[ein][pos];
                    gains.push(scale);
                    let fin = f[ein].as_ref().expect("inputs resolved before node");
                    for (slot, &coord) in row.iter_mut().zip(fin) {
                        *slot = field.add_idx(*slot, field.mul_idx(scale, coord));
                    }
                }
                rows.push(row);
                row_gains.push(gains);
            }
            let pivot = rows.iter().position(|r| r.iter().any(|&x| x != 0));
            match pivot {
                Some(i_star) => {
                    let fe = rows[i_star].clone();
                    for (k, &ein) in ins.iter().enumerate() {
                        coeffs.insert(
                            (problem.edges[ein].id.clone(), problem.edges[e].id.clone()),
                            row_gains[i_star][k],
                        );
                    }
                    // Scalar per row, then the whole row is asserted.
                    let t = fe.iter().position(|&x| x != 0).unwrap();
                    let inv = field.inv_idx(fe[t]).expect("nonzero pivot");
                    let mut scal = Vec::with_capacity(rows.len());
                    for row in &rows {
                        let s = field.mul_idx(row[t], inv);
                        for (&got, &want) in row.iter().zip(&fe) {
                            if got != field.mul_idx(s, want) {
                                return Err(RecoverError::RankViolation {
                                    edge: problem.edges[e].id.0.clone(),
                                });
                            }
                        }
                        scal.push(s);
                    }
                    f[e] = Some(fe);
                    c[e] = scal;
                }
                None => {
                    // Zero (or copy-free) flow: zero function, zero gains.
                    f[e] = Some(vec![0u32; n]);
                    c[e] = vec![0u32; copies.len()];
                    for &ein in &ins {
                        coeffs.insert(
                            (problem.edges[ein].id.clone(), problem.edges[e].id.clone()),
                            0,
                        );
                    }
                }
            }
        }
    }

    // Sink decoding scalars: one copy of each sink input exists.
    let mut decode = Vec::new();
    for (j, t) in problem.sinks.iter().enumerate() {
        let mut ins: Vec<usize> = problem.in_edges(t.node).to_vec();
        ins.sort_by(|&a, &b| problem.edges[a].id.cmp(&problem.edges[b].id));
        for &e in &ins {
            debug_assert_eq!(forest.edge_replicas(e).len(), 1);
            let value = c[e].first().copied().unwrap_or(0);
            decode.push(DecodeEntry {
                sink: t.node,
                edge: problem.edges[e].id.clone(),
                value: field.elem_at(value),
            });
            coeffs.insert(
                (problem.edges[e].id.clone(), Problem::sink_virtual_edge(j + 1)),
                value,
            );
        }
    }

    let mut states = BTreeMap::new();
    let mut edge_functions = BTreeMap::new();
    for (e, edge) in problem.edges.iter().enumerate() {
        let fe = f[e].take().unwrap_or_else(|| vec![0u32; n]);
        let state = EdgeState {
            coding_vector: fe.iter().map(|&i| field.elem_at(i)).collect(),
            scaling: c[e].iter().map(|&i| field.elem_at(i)).collect(),
        };
        edge_functions.insert(edge.id.clone(), state.coding_vector.clone());
        states.insert(edge.id.clone(), state);
    }

    let code = NetworkCode {
        field: field.clone(),
        coeffs: coeffs
            .into_iter()
            .map(|(k, v)| (k, field.elem_at(v)))
            .collect(),
        decode,
        edge_functions,
    };
    Ok((code, states))
}

/// Normalizes, transforms, and runs the derivation.
pub fn derive_code(problem: &Problem, solution: &Solution) -> Result<NetworkCode, RecoverError> {
    let problem = problem.normalize_rates();
    let topo = problem.topo_sort().expect("validated problem");
    let forest = transform(&problem, &topo);
    derive_states(&problem, &forest, solution).map(|(code, _)| code)
}

/// Per-sink outcome of the forward check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SinkCheck {
    pub sink: NodeId,
    pub demand: usize,
    pub pass: bool,
    pub output: Vec<FieldElem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub sinks: Vec<SinkCheck>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.sinks.iter().all(|s| s.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sinks: Vec<serde_json::Value> = self
            .sinks
            .iter()
            .map(|s| {
                let coords: Vec<String> = s.output.iter().map(|x| x.to_string()).collect();
                serde_json::json!({
                    "sink": s.sink,
                    "demand": s.demand,
                    "pass": s.pass,
                    "output": coords,
                })
            })
            .collect();
        serde_json::json!({"pass": self.pass(), "sinks": sinks})
    }
}

/// Independent forward propagation of coding vectors from unit vectors at
/// the source virtual edges, using only the stored coefficients (absent
/// pairs count as zero). A sink passes when its decoded combination is
/// exactly the demanded unit vector.
pub fn verify_code(problem: &Problem, code: &NetworkCode) -> VerifyReport {
    let problem = problem.normalize_rates();
    let field = &code.field;
    let n = problem.sources.len();
    let topo = problem.topo_sort().expect("validated problem");
    let coeff_idx = |from: &EdgeId, to: &EdgeId| -> u32 {
        code.coeff(from, to).map(|e| field.index_of(e)).unwrap_or(0)
    };

    let source_of: HashMap<NodeId, usize> = problem
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.node, i))
        .collect();
    let sink_nodes: HashMap<NodeId, usize> = problem
        .sinks
        .iter()
        .enumerate()
        .map(|(j, t)| (t.node, j))
        .collect();

    let mut flows: Vec<Vec<u32>> = vec![vec![0u32; n]; problem.edges.len()];
    for &v in topo.order.iter().rev() {
        if let Some(&i) = source_of.get(&v) {
            for &e in problem.out_edges(v) {
                let gain = coeff_idx(
                    &Problem::source_virtual_edge(i + 1),
                    &problem.edges[e].id,
                );
                flows[e][i] = gain;
            }
            continue;
        }
        if sink_nodes.contains_key(&v) {
            continue;
        }
        for &e in problem.out_edges(v) {
            let mut out = vec![0u32; n];
            for &ein in problem.in_edges(v) {
                let gain = coeff_idx(&problem.edges[ein].id, &problem.edges[e].id);
                if gain == 0 {
                    continue;
                }
                for (slot, &coord) in out.iter_mut().zip(&flows[ein]) {
                    *slot = field.add_idx(*slot, field.mul_idx(gain, coord));
                }
            }
            flows[e] = out;
        }
    }

    let decode_value = |sink: NodeId, edge: &EdgeId| -> u32 {
        code.decode
            .iter()
            .find(|d| d.sink == sink && &d.edge == edge)
            .map(|d| field.index_of(&d.value))
            .unwrap_or(0)
    };

    let mut sinks = Vec::new();
    for t in &problem.sinks {
        let mut out = vec![0u32; n];
        for &ein in problem.in_edges(t.node) {
            let d = decode_value(t.node, &problem.edges[ein].id);
            if d == 0 {
                continue;
            }
            for (slot, &coord) in out.iter_mut().zip(&flows[ein]) {
                *slot = field.add_idx(*slot, field.mul_idx(d, coord));
            }
        }
        let mut unit = vec![0u32; n];
        unit[t.demand - 1] = 1;
        sinks.push(SinkCheck {
            sink: t.node,
            demand: t.demand,
            pass: out == unit,
            output: out.into_iter().map(|i| field.elem_at(i)).collect(),
        });
    }
    VerifyReport { sinks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::forest::transform;

    fn gf4_setup() -> (Problem, Forest, Solution) {
        let p = fixtures::butterfly();
        let topo = p.topo_sort().unwrap();
        let forest = transform(&p, &topo);
        let sol = fixtures::butterfly_gf4_solution();
        (p, forest, sol)
    }

    fn elem(f: &FieldSpec, text: &str) -> FieldElem {
        f.parse_elem(text).unwrap()
    }

    #[test]
    fn gf4_walkthrough_values() {
        let (p, forest, sol) = gf4_setup();
        let f = sol.field.clone();
        let (code, states) = derive_states(&p, &forest, &sol).unwrap();

        let alpha = elem(&f, "0,1");
        let alpha_sq = elem(&f, "1,1");
        let one = f.one();
        let zero = f.zero();

        let e3 = &states[&EdgeId("e3".into())];
        assert_eq!(e3.coding_vector, vec![alpha.clone(), one.clone()]);
        assert_eq!(
            e3.scaling,
            vec![zero.clone(), one.clone(), alpha_sq.clone(), zero.clone()]
        );

        let coeff = |from: &str, to: &str| {
            code.coeff(&EdgeId(from.into()), &EdgeId(to.into())).unwrap().clone()
        };
        assert_eq!(coeff("e1", "e3"), alpha);
        assert_eq!(coeff("e2", "e3"), one);
        assert_eq!(coeff("e3", "e6"), one);
        assert_eq!(coeff("e3", "e7"), alpha_sq);
        assert_eq!(coeff("e4", "e8"), one);
        assert_eq!(coeff("e6", "e8"), zero);
        assert_eq!(coeff("e4", "e9"), alpha);
        assert_eq!(coeff("e6", "e9"), one);

        let e6 = &states[&EdgeId("e6".into())];
        assert_eq!(e6.coding_vector, vec![alpha.clone(), one.clone()]);
        let e7 = &states[&EdgeId("e7".into())];
        assert_eq!(e7.coding_vector, vec![one.clone(), alpha_sq.clone()]);
        let e8 = &states[&EdgeId("e8".into())];
        assert_eq!(e8.coding_vector, vec![one.clone(), zero.clone()]);
        let e9 = &states[&EdgeId("e9".into())];
        assert_eq!(e9.coding_vector, vec![zero.clone(), one.clone()]);
    }

    #[test]
    fn gf4_initial_scaling_vectors() {
        let (p, forest, sol) = gf4_setup();
        let f = sol.field.clone();
        let (_, states) = derive_states(&p, &forest, &sol).unwrap();
        let alpha = elem(&f, "0,1");
        let alpha_sq = elem(&f, "1,1");
        let s = |name: &str| states[&EdgeId(name.into())].scaling.clone();
        assert_eq!(s("e1"), vec![f.zero(), alpha.clone(), f.one(), f.zero()]);
        assert_eq!(s("e2"), vec![f.zero(), f.one(), alpha_sq.clone(), f.zero()]);
        assert_eq!(s("e4"), vec![f.one(), alpha.clone()]);
        assert_eq!(s("e5"), vec![alpha_sq.clone(), f.one()]);
    }

    #[test]
    fn gf4_code_verifies_at_all_sinks() {
        let (p, forest, sol) = gf4_setup();
        let (code, _) = derive_states(&p, &forest, &sol).unwrap();
        let report = verify_code(&p, &code);
        assert!(report.pass(), "{}", report.to_json());
        assert_eq!(report.sinks.len(), 4);
    }

    #[test]
    fn perturbed_coefficient_fails_verification() {
        let (p, forest, sol) = gf4_setup();
        let (mut code, _) = derive_states(&p, &forest, &sol).unwrap();
        let key = (EdgeId("e2".into()), EdgeId("e3".into()));
        code.coeffs.insert(key, code.field.zero());
        let report = verify_code(&p, &code);
        assert!(!report.pass());
        let failing: Vec<u64> = report
            .sinks
            .iter()
            .filter(|s| !s.pass)
            .map(|s| s.sink.0)
            .collect();
        assert!(!failing.is_empty());
    }

    #[test]
    fn identity_relay_on_path_graph() {
        let text = r#"{"nodes":[1,2,3],"edges":[{"id":"e1","tail":1,"head":2},{"id":"e2","tail":2,"head":3}],
            "sources":[{"node":1}],"sinks":[{"node":3,"demand":1}]}"#;
        let p = Problem::from_json_str(text).unwrap();
        let f = FieldSpec::parse("2").unwrap();
        let sol = Solution {
            field: f.clone(),
            assignment: [(crate::poly::VarId::from_name("g1_1_1"), f.one())]
                .into_iter()
                .collect(),
        };
        let code = derive_code(&p, &sol).unwrap();
        assert!(verify_code(&p, &code).pass());
        assert_eq!(
            code.edge_functions[&EdgeId("e2".into())],
            vec![f.one()]
        );
    }

    #[test]
    fn non_solution_rejected() {
        let (p, forest, mut sol) = gf4_setup();
        let f = sol.field.clone();
        sol.assignment
            .insert(crate::poly::VarId::from_name("g1_1_1"), f.zero());
        assert!(matches!(
            derive_states(&p, &forest, &sol),
            Err(RecoverError::NotASolution(_))
        ));
    }

    #[test]
    fn code_json_round_trip() {
        let (p, forest, sol) = gf4_setup();
        let (code, _) = derive_states(&p, &forest, &sol).unwrap();
        let text = serde_json::to_string(&code.to_json()).unwrap();
        let reloaded = NetworkCode::from_json_str(&text).unwrap();
        assert_eq!(reloaded, code);
    }
}

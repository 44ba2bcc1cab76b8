//! Equation builders: the degree-2 path-gain system (linear no-interference
//! plus quadratic edge-compatibility conditions) and, as an independent
//! oracle, the classical edge-to-edge gain system obtained by forward
//! propagation of coding vectors.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::forest::{transform, Forest, LeafVar};
use crate::network::{NetworkError, Problem, TopoOrder};
use crate::poly::{Equation, Monomial, Poly, PolySystem, VarId};

#[derive(Debug, Error)]
pub enum EquationsError {
    #[error("sink {sink} demands source {demanded} but no path connects them")]
    UnsatisfiableDemand { sink: u64, demanded: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub fn leaf_var_id(lv: &LeafVar) -> VarId {
    VarId::PathGain {
        source: lv.source,
        tree: lv.tree,
        copy: lv.copy,
    }
}

/// The normalized problem together with everything derived from it.
pub struct PathFormulation {
    pub problem: Problem,
    pub topo: TopoOrder,
    pub forest: Forest,
    pub system: PolySystem,
}

/// One linear equation per (tree, source) pair with at least one path:
/// the source's path gains into that tree sum to 1 when demanded, 0
/// otherwise. A demanded source with no path is reported eagerly, since it
/// would yield the constant equation 1 = 0.
pub fn build_no_interference(
    forest: &Forest,
    problem: &Problem,
) -> Result<Vec<Equation>, EquationsError> {
    let mut out = Vec::new();
    for tree in &forest.trees {
        for i in 1..=problem.sources.len() {
            let leaves = forest.h_set(tree.root, i as u32);
            if leaves.is_empty() {
                if i == tree.demand {
                    return Err(EquationsError::UnsatisfiableDemand {
                        sink: tree.sink.0,
                        demanded: i,
                    });
                }
                continue;
            }
            let mut poly = Poly::zero();
            for &lv in leaves {
                poly = poly.add(&Poly::var(leaf_var_id(&forest.leaf_vars[lv as usize])));
            }
            if i == tree.demand {
                poly = poly.sub(&Poly::constant(1));
            }
            out.push(Equation {
                poly,
                tag: format!("ni:{}", tree.sink),
            });
        }
    }
    Ok(out)
}

fn h_sum(forest: &Forest, node: usize, source: u32) -> Poly {
    let mut poly = Poly::zero();
    for &lv in forest.h_set(node, source) {
        poly = poly.add(&Poly::var(leaf_var_id(&forest.leaf_vars[lv as usize])));
    }
    poly
}

/// Quadratic compatibility conditions: for each original edge whose copies
/// can carry genuinely different mixtures, every pair of copies and every
/// pair of distinct sources yields a cross-product equation over the leaf
/// descendants of the copies' tails. Three screens prune edges that cannot
/// contribute new conditions (single copy, single source, single-input
/// tail); canonical-form deduplication remains the ground truth.
pub fn build_edge_compat(forest: &Forest, problem: &Problem) -> Vec<Equation> {
    let n_sources = problem.sources.len();
    let mut out = Vec::new();
    for (e, edge) in problem.edges.iter().enumerate() {
        let copies = forest.edge_replicas(e);
        if copies.len() < 2 {
            continue;
        }
        if problem.in_edges(edge.tail).len() <= 1 {
            continue;
        }
        let mut reaching: BTreeSet<u32> = BTreeSet::new();
        for &te in copies {
            let tail = forest.edges[te].tail;
            reaching.extend(forest.h_sources(tail));
        }
        if reaching.len() < 2 {
            continue;
        }
        for (a, &ca) in copies.iter().enumerate() {
            for &cb in copies.iter().skip(a + 1) {
                let v1 = forest.edges[ca].tail;
                let v2 = forest.edges[cb].tail;
                for i1 in 1..=n_sources as u32 {
                    for i2 in i1 + 1..=n_sources as u32 {
                        let lhs = h_sum(forest, v1, i1).mul(&h_sum(forest, v2, i2));
                        let rhs = h_sum(forest, v2, i1).mul(&h_sum(forest, v1, i2));
                        let poly = lhs.sub(&rhs);
                        if poly.is_zero() {
                            continue;
                        }
                        out.push(Equation {
                            poly,
                            tag: format!(
                                "ec:{}:t{}~t{}:s{},s{}",
                                edge.id,
                                forest.edges[ca].tree,
                                forest.edges[cb].tree,
                                i1,
                                i2
                            ),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Normalize, order, transform, and assemble the full path-gain system.
pub fn build_path_formulation(problem: &Problem) -> Result<PathFormulation, EquationsError> {
    let problem = problem.normalize_rates();
    let topo = problem.topo_sort()?;
    let forest = transform(&problem, &topo);
    let mut equations = build_no_interference(&forest, &problem)?;
    equations.extend(build_edge_compat(&forest, &problem));
    let mut variables: Vec<VarId> = forest.leaf_vars.iter().map(leaf_var_id).collect();
    variables.sort();
    let system = PolySystem::new(variables, equations);
    assert!(
        system.max_degree() <= 2,
        "path-gain systems are degree <= 2 by construction"
    );
    Ok(PathFormulation {
        problem,
        topo,
        forest,
        system,
    })
}

pub fn build_path_system(problem: &Problem) -> Result<PolySystem, EquationsError> {
    Ok(build_path_formulation(problem)?.system)
}

/// Edge-to-edge gain formulation: coding vectors propagate forward from unit
/// vectors at the sources; a gain variable appears wherever a node merges
/// two or more inputs (elsewhere the flow passes through unchanged, as in
/// the classical illustration). Each sink contributes |S| coordinate
/// equations; their degree grows with path length.
pub fn build_km_system(problem: &Problem) -> PolySystem {
    let problem = problem.normalize_rates();
    let topo = problem.topo_sort().expect("validated problem");
    let n = problem.sources.len();
    let source_index: std::collections::HashMap<_, _> = problem
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.node, i))
        .collect();

    let zero_vec = || vec![Poly::zero(); n];
    let mut flows: Vec<Vec<Poly>> = vec![zero_vec(); problem.edges.len()];

    let combine = |problem: &Problem, flows: &Vec<Vec<Poly>>, ins: &[usize], to: &crate::network::EdgeId| {
        let mut sorted: Vec<usize> = ins.to_vec();
        sorted.sort_by(|&a, &b| problem.edges[a].id.cmp(&problem.edges[b].id));
        match sorted.len() {
            0 => vec![Poly::zero(); problem.sources.len()],
            1 => flows[sorted[0]].clone(),
            _ => {
                let mut acc = vec![Poly::zero(); problem.sources.len()];
                for &ei in &sorted {
                    let gain = Poly::var(VarId::EdgeGain {
                        from: problem.edges[ei].id.clone(),
                        to: to.clone(),
                    });
                    for (c, slot) in acc.iter_mut().enumerate() {
                        *slot = slot.add(&gain.mul(&flows[ei][c]));
                    }
                }
                acc
            }
        }
    };

    for &v in topo.order.iter().rev() {
        if let Some(&i) = source_index.get(&v) {
            for &e in problem.out_edges(v) {
                let mut unit = zero_vec();
                unit[i] = Poly::constant(1);
                flows[e] = unit;
            }
            continue;
        }
        let ins = problem.in_edges(v).to_vec();
        for &e in problem.out_edges(v) {
            flows[e] = combine(&problem, &flows, &ins, &problem.edges[e].id);
        }
    }

    let mut equations = Vec::new();
    for (j, sink) in problem.sinks.iter().enumerate() {
        let out_id = Problem::sink_virtual_edge(j + 1);
        let output = combine(&problem, &flows, problem.in_edges(sink.node), &out_id);
        for c in 1..=n {
            let mut poly = output[c - 1].clone();
            if c == sink.demand {
                poly = poly.sub(&Poly::constant(1));
            }
            equations.push(Equation {
                poly,
                tag: format!("km:{}:{}", sink.node, c),
            });
        }
    }

    let mut variables: BTreeSet<VarId> = BTreeSet::new();
    for eq in &equations {
        variables.extend(eq.poly.variables().cloned());
    }
    PolySystem::new(variables.into_iter().collect(), equations)
}

/// The product of edge-to-edge gains along the original path realized by a
/// leaf variable, under the same gain-placement convention as
/// `build_km_system`. Substituting these monomials for the path-gain
/// variables turns the no-interference equations into the sink equations of
/// the edge-gain system.
pub fn expand_path_in_gains(forest: &Forest, problem: &Problem, lv: &LeafVar) -> Monomial {
    let path = forest.leaf_path(problem, lv);
    let mut gains = Vec::new();
    for pair in path.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        let next_idx = problem.edge_index(next).expect("path edge");
        let via = problem.edges[next_idx].tail;
        if problem.in_edges(via).len() > 1 {
            gains.push(VarId::EdgeGain {
                from: prev.clone(),
                to: next.clone(),
            });
        }
    }
    // Final hop onto the sink's virtual output edge.
    if let Some(last) = path.last() {
        let sink_node = forest.trees[lv.tree as usize - 1].sink;
        if problem.in_edges(sink_node).len() > 1 {
            gains.push(VarId::EdgeGain {
                from: (*last).clone(),
                to: Problem::sink_virtual_edge(lv.tree as usize),
            });
        }
    }
    Monomial::from_vars(gains)
}

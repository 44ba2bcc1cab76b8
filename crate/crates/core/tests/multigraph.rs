//! A deliberately nasty instance: parallel edges (p1/p2), a shared
//! bottleneck (e9) whose copies land twice in the same tree, a dead-end
//! branch (e7 into undeclared node 9), an undeclared zero-flow feeder (node
//! 8 into sink 7), and a sink with two inputs. Exercises the transformation,
//! both equation builders, solving, recovery, and verification off the happy
//! path.

use pathgain::equations::{build_km_system, build_path_formulation};
use pathgain::forest::enumerate_paths;
use pathgain::galois::FieldSpec;
use pathgain::network::{EdgeId, NodeId, Problem};
use pathgain::recover::{derive_states, verify_code};
use pathgain::simplify::{DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH};
use pathgain::solve::{brute_force, solvable_over, SolveMode, DEFAULT_BUDGET};

fn problem(demand_of_sink_10: usize) -> Problem {
    let text = format!(
        r#"{{"nodes":[1,2,3,4,7,8,9,10,11],
            "edges":[
              {{"id":"e1","tail":1,"head":11}},
              {{"id":"e2","tail":2,"head":11}},
              {{"id":"e9","tail":11,"head":3}},
              {{"id":"p1","tail":3,"head":4}},
              {{"id":"p2","tail":3,"head":4}},
              {{"id":"e5","tail":4,"head":7}},
              {{"id":"e8","tail":4,"head":10}},
              {{"id":"e6","tail":8,"head":7}},
              {{"id":"e7","tail":3,"head":9}}],
            "sources":[{{"node":1}},{{"node":2}}],
            "sinks":[{{"node":7,"demand":1}},{{"node":10,"demand":{}}}]}}"#,
        demand_of_sink_10
    );
    Problem::from_json_str(&text).unwrap()
}

#[test]
fn forest_handles_parallel_edges_and_dead_ends() {
    let p = problem(2);
    let pf = build_path_formulation(&p).unwrap();

    // Two parallel routes into each tree: four paths per sink pair total.
    for (i, j) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        assert_eq!(enumerate_paths(&pf.problem, i, j).len(), 2);
        let leaves = pf
            .forest
            .leaf_vars
            .iter()
            .filter(|lv| lv.source == i as u32 && lv.tree == j as u32)
            .count();
        assert_eq!(leaves, 2, "N_{}{}", i, j);
    }

    // The dead-end copy of node 3 (through e7 into node 9) is not part of
    // any sink tree, so four copies remain, two per tree.
    assert_eq!(pf.forest.node_replicas(NodeId(3)).len(), 4);
    let e7 = pf.problem.edge_index(&EdgeId("e7".into())).unwrap();
    assert!(pf.forest.edge_replicas(e7).is_empty());

    // Compatibility conditions come from the bottleneck e9 alone (the
    // parallel pair sits behind a single-input node, so its conditions
    // duplicate e9's); one of the six pairs is within a single tree.
    let ec_tags: Vec<&str> = pf
        .system
        .equations
        .iter()
        .filter(|e| e.tag.starts_with("ec:"))
        .map(|e| e.tag.as_str())
        .collect();
    assert_eq!(ec_tags.len(), 6);
    assert!(ec_tags.iter().all(|t| t.starts_with("ec:e9:")));
    assert!(ec_tags.iter().any(|t| t.contains("t1~t1")), "{:?}", ec_tags);
}

#[test]
fn conflicting_demands_unsolvable_in_both_formulations() {
    let p = problem(2); // sink 7 wants X1, sink 10 wants X2, one bottleneck
    for field in ["2", "3", "2^2"] {
        let f = FieldSpec::parse(field).unwrap();
        let report = solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH)
            .unwrap();
        assert!(!report.solvable, "path formulation over GF({})", field);
        let km = build_km_system(&p);
        let km_solvable = brute_force(&km, &f, SolveMode::First, DEFAULT_BUDGET)
            .unwrap()
            .first()
            .is_some();
        assert!(!km_solvable, "edge formulation over GF({})", field);
    }
}

/// Two paths from source 1 converge before the bottleneck, so the
/// compatibility condition carries a genuine sum: (g1_1_1 + g1_1_2) * g2_2_1
/// = (g1_2_1 + g1_2_2) * g2_1_1.
fn convergent_problem(demand_of_second_sink: usize) -> Problem {
    let text = format!(
        r#"{{"nodes":[1,2,3,4,5,6,7,8],
            "edges":[
              {{"id":"x1","tail":1,"head":3}},
              {{"id":"x2","tail":1,"head":4}},
              {{"id":"x3","tail":3,"head":5}},
              {{"id":"x4","tail":4,"head":5}},
              {{"id":"x5","tail":2,"head":5}},
              {{"id":"em","tail":5,"head":6}},
              {{"id":"y1","tail":6,"head":7}},
              {{"id":"y2","tail":6,"head":8}}],
            "sources":[{{"node":1}},{{"node":2}}],
            "sinks":[{{"node":7,"demand":1}},{{"node":8,"demand":{}}}]}}"#,
        demand_of_second_sink
    );
    Problem::from_json_str(&text).unwrap()
}

#[test]
fn convergent_paths_give_sum_compatibility_conditions() {
    let p = convergent_problem(2);
    let pf = build_path_formulation(&p).unwrap();
    let ec: Vec<_> = pf
        .system
        .equations
        .iter()
        .filter(|e| e.tag.starts_with("ec:em"))
        .collect();
    assert_eq!(ec.len(), 1);
    // Expanded cross product of the two-leaf and one-leaf h-sets: four terms.
    assert_eq!(ec[0].poly.terms().len(), 4);
    assert_eq!(ec[0].poly.degree(), 2);

    // Conflicting demands through the bottleneck: unsolvable either way.
    let f = FieldSpec::parse("2").unwrap();
    let report =
        solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH).unwrap();
    assert!(!report.solvable);
    let km_solvable = brute_force(&build_km_system(&p), &f, SolveMode::First, DEFAULT_BUDGET)
        .unwrap()
        .first()
        .is_some();
    assert!(!km_solvable);

    // Aligned demands pass and the recovered code verifies.
    let p = convergent_problem(1);
    let report =
        solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH).unwrap();
    assert!(report.solvable);
    let code = pathgain::recover::derive_code(&p, &report.witness.unwrap()).unwrap();
    assert!(verify_code(&p, &code).pass());
}

#[test]
fn multi_rate_endpoints_normalize_solve_and_recover() {
    // Node 1 produces two symbols; node 4 demands both of them.
    let text = r#"{"nodes":[1,2,3,4],
        "edges":[
          {"id":"e1","tail":1,"head":2},
          {"id":"e2","tail":1,"head":3},
          {"id":"e3","tail":2,"head":4},
          {"id":"e4","tail":3,"head":4}],
        "sources":[{"node":1},{"node":1}],
        "sinks":[{"node":4,"demand":1},{"node":4,"demand":2}]}"#;
    let p = Problem::from_json_str(text).unwrap();
    assert!(!p.is_normalized());

    let pf = build_path_formulation(&p).unwrap();
    assert!(pf.problem.is_normalized());
    assert_eq!(pf.forest.trees.len(), 2);

    for field in ["2", "3", "2^2"] {
        let f = FieldSpec::parse(field).unwrap();
        let report =
            solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH)
                .unwrap();
        assert!(report.solvable, "over GF({})", field);
        let code = pathgain::recover::derive_code(&p, &report.witness.unwrap()).unwrap();
        let rep = verify_code(&p, &code);
        assert!(rep.pass(), "GF({}): {}", field, rep.to_json());
        // Coefficients exist for the normalized problem's virtual edges.
        assert!(code
            .coeffs
            .keys()
            .any(|(from, _)| from.0.starts_with("v_src_")));
        assert!(code
            .coeffs
            .keys()
            .any(|(_, to)| to.0.starts_with("v_snk_")));
    }
}

#[test]
fn aligned_demands_solve_and_recover() {
    let p = problem(1); // both sinks want X1
    let f = FieldSpec::parse("2").unwrap();
    let report =
        solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH).unwrap();
    assert!(report.solvable);
    let witness = report.witness.unwrap();

    let pf = build_path_formulation(&p).unwrap();
    let (code, states) = derive_states(&pf.problem, &pf.forest, &witness).unwrap();

    // The zero-flow feeder contributes a zero function and a zero decode
    // coefficient; nothing else may reference it.
    let e6 = &states[&EdgeId("e6".into())];
    assert!(e6.coding_vector.iter().all(|x| *x == f.zero()));
    let decode_e6 = code
        .decode
        .iter()
        .find(|d| d.edge == EdgeId("e6".into()))
        .unwrap();
    assert_eq!(decode_e6.value, f.zero());

    // The dead-end edge exists in the code with a zero-scaled state.
    assert!(states.contains_key(&EdgeId("e7".into())));

    let rep = verify_code(&p, &code);
    assert!(rep.pass(), "{}", rep.to_json());
}

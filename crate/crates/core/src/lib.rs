//! Scalar linear network coding through path-gain polynomial systems.
//!
//! Given a directed acyclic multigraph with unit-capacity links, declared
//! sources, and sinks with demands, this crate:
//!
//! * transforms the network into sink-rooted trees whose leaves are in
//!   bijection with the source-to-sink paths,
//! * assembles the path-gain polynomial system (linear no-interference
//!   conditions plus quadratic edge-compatibility conditions, never more
//!   than degree 2),
//! * simplifies it over all characteristics at once and extracts
//!   characteristic constraints such as "solvable only when 2 = 0",
//! * searches for solutions over small fields GF(p^m) by exhaustive
//!   enumeration,
//! * converts any path-gain solution into deployable edge-to-edge coding
//!   coefficients, and
//! * cross-checks everything against the classical edge-to-edge gain
//!   formulation built by forward propagation of coding vectors.

pub mod equations;
pub mod fixtures;
pub mod forest;
pub mod galois;
pub mod network;
pub mod poly;
pub mod random;
pub mod recover;
pub mod simplify;
pub mod solve;

pub use equations::{
    build_edge_compat, build_km_system, build_no_interference, build_path_formulation,
    build_path_system, expand_path_in_gains, EquationsError, PathFormulation,
};
pub use forest::{enumerate_paths, transform, Forest, LeafVar};
pub use galois::{FieldElem, FieldError, FieldSpec};
pub use network::{Edge, EdgeId, NetworkError, NodeId, Problem, SinkDecl, SourceDecl, TopoOrder};
pub use poly::{Equation, Monomial, Poly, PolySystem, VarId};
pub use random::{random_dag, GenError, Rng};
pub use recover::{
    derive_code, derive_states, verify_code, EdgeState, NetworkCode, RecoverError, VerifyReport,
};
pub use simplify::{
    branch_analyze, drop_unused, lift_solution, linear_eliminate, simplify, CharVerdict,
    SimplifyError, SimplifyResult, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH,
};
pub use solve::{
    brute_force, solvable_over, solve_system, SolveError, SolveMode, SolveOutcome, SolveReport,
    Solution, SystemSolve, DEFAULT_BUDGET,
};

//! Bundled fixtures: the classic butterfly network (two sources, four sinks)
//! and a three-source equation system that is solvable only in
//! characteristic 2. Both ship as files under `fixtures/` and are embedded
//! here for tests and for the library's own smoke checks.

use crate::network::Problem;
use crate::poly::PolySystem;
use crate::solve::Solution;

pub const BUTTERFLY_JSON: &str = include_str!("../fixtures/butterfly.json");
pub const CHAR2_SYSTEM_JSON: &str = include_str!("../fixtures/char2_system.json");
pub const BUTTERFLY_GF4_SOLUTION_JSON: &str =
    include_str!("../fixtures/butterfly_gf4_solution.json");

pub fn butterfly() -> Problem {
    Problem::from_json_str(BUTTERFLY_JSON).expect("bundled butterfly fixture")
}

pub fn char2_system() -> PolySystem {
    let value: serde_json::Value =
        serde_json::from_str(CHAR2_SYSTEM_JSON).expect("bundled char2 fixture");
    PolySystem::from_json(&value).expect("bundled char2 fixture")
}

pub fn butterfly_gf4_solution() -> Solution {
    Solution::from_json_str(BUTTERFLY_GF4_SOLUTION_JSON).expect("bundled gf4 solution fixture")
}

//! Exhaustive solution search over a chosen small field, plus the end-to-end
//! solvability pipeline (build, simplify, characteristic check, search,
//! lift).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equations::{build_path_formulation, EquationsError};
use crate::galois::{FieldElem, FieldError, FieldSpec};
use crate::network::Problem;
use crate::poly::{PolySystem, VarId};
use crate::simplify::{lift_solution, simplify, CharVerdict, SimplifyError, SimplifyResult};

/// Default evaluation budget: 2^24 equation evaluations.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("search space of {space} assignments exceeds the budget of {budget}")]
    BudgetExceeded { space: u128, budget: u64 },
    #[error(transparent)]
    Equations(#[from] EquationsError),
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cannot parse solution: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    First,
    All,
    Count,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    First(Option<BTreeMap<VarId, FieldElem>>),
    All(Vec<BTreeMap<VarId, FieldElem>>),
    Count(u64),
}

impl SolveOutcome {
    pub fn count(&self) -> u64 {
        match self {
            SolveOutcome::First(Some(_)) => 1,
            SolveOutcome::First(None) => 0,
            SolveOutcome::All(v) => v.len() as u64,
            SolveOutcome::Count(n) => *n,
        }
    }

    pub fn first(&self) -> Option<&BTreeMap<VarId, FieldElem>> {
        match self {
            SolveOutcome::First(s) => s.as_ref(),
            SolveOutcome::All(v) => v.first(),
            SolveOutcome::Count(_) => None,
        }
    }
}

struct CompiledEq {
    terms: Vec<(u32, Vec<usize>)>,
}

/// Enumerates assignments in lexicographic element order (first variable
/// most significant), aborting each assignment at its first violated
/// equation. The budget is spent in equation evaluations.
pub fn brute_force(
    system: &PolySystem,
    field: &FieldSpec,
    mode: SolveMode,
    budget: u64,
) -> Result<SolveOutcome, SolveError> {
    let vars = &system.variables;
    let q = field.q() as u128;
    let space = q
        .checked_pow(vars.len() as u32)
        .unwrap_or(u128::MAX);

    if system.equations.is_empty() && mode == SolveMode::First {
        let zeros = vars
            .iter()
            .map(|v| (v.clone(), field.zero()))
            .collect();
        return Ok(SolveOutcome::First(Some(zeros)));
    }
    if space > budget as u128 {
        return Err(SolveError::BudgetExceeded { space, budget });
    }

    // Pre-map integer coefficients into the field; terms that vanish are
    // dropped, and an equation left as a nonzero constant kills everything.
    let mut compiled: Vec<CompiledEq> = Vec::new();
    let positions: std::collections::HashMap<&VarId, usize> =
        vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    for eq in &system.equations {
        let mut terms = Vec::new();
        let mut constant = 0u32;
        for (c, m) in eq.poly.terms() {
            let coeff = field.from_int_idx(*c);
            if coeff == 0 {
                continue;
            }
            if m.degree() == 0 {
                constant = field.add_idx(constant, coeff);
                continue;
            }
            let var_pos: Vec<usize> = m.vars().iter().map(|v| positions[v]).collect();
            terms.push((coeff, var_pos));
        }
        if terms.is_empty() {
            if constant != 0 {
                return Ok(match mode {
                    SolveMode::First => SolveOutcome::First(None),
                    SolveMode::All => SolveOutcome::All(Vec::new()),
                    SolveMode::Count => SolveOutcome::Count(0),
                });
            }
            continue;
        }
        if constant != 0 {
            terms.push((constant, Vec::new()));
        }
        compiled.push(CompiledEq { terms });
    }

    let n = vars.len();
    let mut values = vec![0u32; n];
    let mut evals: u64 = 0;
    let mut found: Vec<Vec<u32>> = Vec::new();
    let mut count: u64 = 0;

    'outer: loop {
        let mut ok = true;
        for eq in &compiled {
            evals += 1;
            if evals > budget {
                return Err(SolveError::BudgetExceeded { space, budget });
            }
            let mut acc = 0u32;
            for (coeff, var_pos) in &eq.terms {
                let mut t = *coeff;
                for &p in var_pos {
                    let v = values[p];
                    if v == 0 {
                        t = 0;
                        break;
                    }
                    t = field.mul_idx(t, v);
                }
                acc = field.add_idx(acc, t);
            }
            if acc != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            match mode {
                SolveMode::First => {
                    found.push(values.clone());
                    break 'outer;
                }
                SolveMode::All => found.push(values.clone()),
                SolveMode::Count => count += 1,
            }
        }
        // Odometer step, last variable fastest.
        let mut i = n;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < field.q() {
                break;
            }
            values[i] = 0;
        }
        if n == 0 {
            break;
        }
    }

    let materialize = |vals: Vec<u32>| -> BTreeMap<VarId, FieldElem> {
        vars.iter()
            .cloned()
            .zip(vals.into_iter().map(|i| field.elem_at(i)))
            .collect()
    };
    Ok(match mode {
        SolveMode::First => SolveOutcome::First(found.into_iter().next().map(materialize)),
        SolveMode::All => SolveOutcome::All(found.into_iter().map(materialize).collect()),
        SolveMode::Count => SolveOutcome::Count(count),
    })
}

/// A full assignment satisfying some system over a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub field: FieldSpec,
    pub assignment: BTreeMap<VarId, FieldElem>,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    field: String,
    assignment: BTreeMap<String, String>,
}

impl Solution {
    pub fn to_json(&self) -> serde_json::Value {
        let doc = SolutionDoc {
            field: self.field.name(),
            assignment: self
                .assignment
                .iter()
                .map(|(v, e)| (v.name(), e.to_string()))
                .collect(),
        };
        serde_json::to_value(doc).expect("solution serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Solution, SolveError> {
        let doc: SolutionDoc =
            serde_json::from_str(text).map_err(|e| SolveError::Parse(e.to_string()))?;
        let field = FieldSpec::parse(&doc.field)?;
        let mut assignment = BTreeMap::new();
        for (name, value) in doc.assignment {
            assignment.insert(VarId::from_name(&name), field.parse_elem(&value)?);
        }
        Ok(Solution { field, assignment })
    }

    /// Every equation evaluates to zero; unassigned variables count as zero.
    pub fn satisfies(&self, system: &PolySystem) -> bool {
        system.equations.iter().all(|eq| {
            eq.poly.eval_idx(&self.field, |v| {
                self.assignment.get(v).map(|e| self.field.index_of(e)).unwrap_or(0)
            }) == 0
        })
    }
}

/// Result of the full solve pipeline on a system.
#[derive(Clone, Debug)]
pub struct SystemSolve {
    pub verdict: CharVerdict,
    pub simplified: SimplifyResult,
    pub solution: Option<Solution>,
}

/// Simplify, check the characteristic, search the reduced system, and lift
/// the first witness back to the original variables.
pub fn solve_system(
    system: &PolySystem,
    field: &FieldSpec,
    budget: u64,
    depth: u32,
    width: u32,
) -> Result<SystemSolve, SolveError> {
    let simplified = simplify(system, depth, width);
    if !simplified.verdict.admits(field.p()) {
        return Ok(SystemSolve {
            verdict: simplified.verdict,
            simplified,
            solution: None,
        });
    }
    let outcome = brute_force(&simplified.reduced, field, SolveMode::First, budget)?;
    let solution = match outcome.first() {
        Some(partial) => {
            let full = lift_solution(&simplified, system, field, partial)?;
            Some(Solution {
                field: field.clone(),
                assignment: full,
            })
        }
        None => None,
    };
    Ok(SystemSolve {
        verdict: simplified.verdict,
        simplified,
        solution,
    })
}

/// Solvability report for a whole problem via the path-gain formulation.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solvable: bool,
    pub verdict: CharVerdict,
    pub witness: Option<Solution>,
}

/// Is the problem scalar-linearly solvable over the given field? A sink
/// demanding an unreachable source short-circuits to "no".
pub fn solvable_over(
    problem: &Problem,
    field: &FieldSpec,
    budget: u64,
    depth: u32,
    width: u32,
) -> Result<SolveReport, SolveError> {
    let formulation = match build_path_formulation(problem) {
        Ok(f) => f,
        Err(EquationsError::UnsatisfiableDemand { .. }) => {
            return Ok(SolveReport {
                solvable: false,
                verdict: CharVerdict::UnsolvableAllFields,
                witness: None,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let solved = solve_system(&formulation.system, field, budget, depth, width)?;
    Ok(SolveReport {
        solvable: solved.solution.is_some(),
        verdict: solved.verdict,
        witness: solved.solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::poly::{Equation, Monomial, Poly};
    use crate::simplify::{DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH};

    fn named(s: &str) -> VarId {
        VarId::Named(s.into())
    }

    #[test]
    fn product_equation_over_gf2_has_unique_solution() {
        let x = named("x");
        let y = named("y");
        let sys = PolySystem::new(
            vec![x.clone(), y.clone()],
            vec![Equation {
                poly: Poly::from_terms(vec![(1, Monomial::from_vars(vec![x.clone(), y.clone()]))])
                    .sub(&Poly::constant(1)),
                tag: String::new(),
            }],
        );
        let f = FieldSpec::parse("2").unwrap();
        let out = brute_force(&sys, &f, SolveMode::All, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.count(), 1);
        let sol = out.first().unwrap();
        assert_eq!(sol[&x], f.one());
        assert_eq!(sol[&y], f.one());
    }

    #[test]
    fn first_returns_lowest_lexicographic_witness() {
        // x*y = 0 over GF(2): solutions (0,0), (0,1), (1,0); first is (0,0).
        let x = named("x");
        let y = named("y");
        let sys = PolySystem::new(
            vec![x.clone(), y.clone()],
            vec![Equation {
                poly: Poly::from_terms(vec![(1, Monomial::from_vars(vec![x.clone(), y.clone()]))]),
                tag: String::new(),
            }],
        );
        let f = FieldSpec::parse("2").unwrap();
        let out = brute_force(&sys, &f, SolveMode::First, DEFAULT_BUDGET).unwrap();
        let sol = out.first().unwrap();
        assert_eq!(sol[&x], f.zero());
        assert_eq!(sol[&y], f.zero());
    }

    #[test]
    fn budget_enforced_upfront() {
        let vars: Vec<VarId> = (0..40).map(|i| named(&format!("v{}", i))).collect();
        let sys = PolySystem::new(
            vars.clone(),
            vec![Equation { poly: Poly::var(vars[0].clone()), tag: String::new() }],
        );
        let f = FieldSpec::parse("3").unwrap();
        assert!(matches!(
            brute_force(&sys, &f, SolveMode::Count, 1000),
            Err(SolveError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn field_constant_collapse() {
        // 2x = 0 over GF(2) is vacuous: every assignment passes.
        let x = named("x");
        let sys = PolySystem::new(
            vec![x.clone()],
            vec![Equation { poly: Poly::var(x.clone()).scale(2), tag: String::new() }],
        );
        let f = FieldSpec::parse("2").unwrap();
        assert_eq!(brute_force(&sys, &f, SolveMode::Count, 1000).unwrap().count(), 2);
        // Over GF(3) it forces x = 0.
        let f3 = FieldSpec::parse("3").unwrap();
        assert_eq!(brute_force(&sys, &f3, SolveMode::Count, 1000).unwrap().count(), 1);
    }

    #[test]
    fn butterfly_solvable_over_gf2_with_valid_witness() {
        let p = fixtures::butterfly();
        let f = FieldSpec::parse("2").unwrap();
        let report =
            solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH)
                .unwrap();
        assert!(report.solvable);
        let witness = report.witness.unwrap();
        let sys = crate::equations::build_path_system(&p).unwrap();
        assert!(witness.satisfies(&sys));
        // Cross-check by brute forcing the full 14-equation system directly.
        let direct = brute_force(&sys, &f, SolveMode::First, DEFAULT_BUDGET).unwrap();
        assert!(direct.first().is_some());
    }

    #[test]
    fn unreachable_demand_is_a_clean_no() {
        let text = r#"{"nodes":[1,2,3],"edges":[{"id":"e1","tail":1,"head":3}],
            "sources":[{"node":1},{"node":2}],
            "sinks":[{"node":3,"demand":2}]}"#;
        let p = Problem::from_json_str(text).unwrap();
        let f = FieldSpec::parse("2").unwrap();
        let report =
            solvable_over(&p, &f, DEFAULT_BUDGET, DEFAULT_BRANCH_DEPTH, DEFAULT_BRANCH_WIDTH)
                .unwrap();
        assert!(!report.solvable);
        assert_eq!(report.verdict, CharVerdict::UnsolvableAllFields);
    }

    #[test]
    fn solution_json_round_trip() {
        let f = FieldSpec::parse("2^2").unwrap();
        let sol = Solution {
            field: f.clone(),
            assignment: [
                (named("x"), f.elem(vec![0, 1]).unwrap()),
                (named("y"), f.one()),
            ]
            .into_iter()
            .collect(),
        };
        let text = serde_json::to_string(&sol.to_json()).unwrap();
        assert_eq!(Solution::from_json_str(&text).unwrap(), sol);
    }

    #[test]
    fn empty_system_trivially_solvable() {
        let sys = PolySystem::new(vec![], vec![]);
        let f = FieldSpec::parse("2").unwrap();
        let out = brute_force(&sys, &f, SolveMode::First, 10).unwrap();
        assert!(out.first().is_some());
    }
}

//! System simplification that is valid over every characteristic at once:
//! pruning of variables that only appear in one linear equation, iterative
//! elimination through unit-coefficient linear pivots, extraction of
//! characteristic constraints from constant equations, and a bounded case
//! analysis that branches on equations of the form c * monomial = 0.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::galois::{FieldElem, FieldSpec};
use crate::poly::{Equation, Poly, PolySystem, VarId};

pub const DEFAULT_BRANCH_DEPTH: u32 = 4;
pub const DEFAULT_BRANCH_WIDTH: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplifyError {
    #[error("field characteristic {0} is inadmissible for this system")]
    InadmissibleCharacteristic(u32),
    #[error("lifted assignment violates the original system: {0}")]
    LiftInconsistency(String),
}

/// Which characteristics can possibly admit a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharVerdict {
    NoConstraint,
    /// Solutions exist at most in characteristics dividing the given
    /// (squarefree) integer.
    OnlyCharsDividing(u64),
    UnsolvableAllFields,
}

impl CharVerdict {
    /// Both constraints must hold.
    pub fn meet(self, other: CharVerdict) -> CharVerdict {
        use CharVerdict::*;
        match (self, other) {
            (UnsolvableAllFields, _) | (_, UnsolvableAllFields) => UnsolvableAllFields,
            (NoConstraint, x) | (x, NoConstraint) => x,
            (OnlyCharsDividing(a), OnlyCharsDividing(b)) => {
                let g = gcd(a, b);
                if g == 1 {
                    UnsolvableAllFields
                } else {
                    OnlyCharsDividing(radical(g))
                }
            }
        }
    }

    /// Either branch may admit a characteristic.
    pub fn join(self, other: CharVerdict) -> CharVerdict {
        use CharVerdict::*;
        match (self, other) {
            (NoConstraint, _) | (_, NoConstraint) => NoConstraint,
            (UnsolvableAllFields, x) | (x, UnsolvableAllFields) => x,
            (OnlyCharsDividing(a), OnlyCharsDividing(b)) => OnlyCharsDividing(radical(a) * radical(b) / gcd(radical(a), radical(b))),
        }
    }

    pub fn admits(&self, p: u32) -> bool {
        match self {
            CharVerdict::NoConstraint => true,
            CharVerdict::OnlyCharsDividing(n) => n % p as u64 == 0,
            CharVerdict::UnsolvableAllFields => false,
        }
    }

    pub fn render(&self) -> String {
        match self {
            CharVerdict::NoConstraint => "no-constraint".into(),
            CharVerdict::OnlyCharsDividing(n) => format!("chars-dividing:{}", n),
            CharVerdict::UnsolvableAllFields => "unsolvable".into(),
        }
    }

    fn from_constant(c: i64) -> CharVerdict {
        let c = c.unsigned_abs();
        if c == 1 {
            CharVerdict::UnsolvableAllFields
        } else {
            CharVerdict::OnlyCharsDividing(radical(c))
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Product of the distinct prime factors.
fn radical(mut n: u64) -> u64 {
    let mut out = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out *= d;
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out *= n;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StepKind {
    Eliminated,
    Dropped,
}

/// One journal entry: `var` was removed, with `equation` (linear in `var`
/// with coefficient +-1) as its defining relation.
#[derive(Clone, Debug)]
struct Step {
    var: VarId,
    equation: Poly,
    kind: StepKind,
}

/// Outcome of the simplification pipeline. The journal preserves the exact
/// chronology of removals so solutions of the reduced system lift back.
#[derive(Clone, Debug)]
pub struct SimplifyResult {
    pub reduced: PolySystem,
    pub verdict: CharVerdict,
    pub branch_log: Vec<String>,
    steps: Vec<Step>,
}

impl SimplifyResult {
    /// Eliminated variables in order, with the expression each equals.
    pub fn trace(&self) -> Vec<(VarId, Poly)> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Eliminated)
            .map(|s| (s.var.clone(), solved_form(&s.equation, &s.var)))
            .collect()
    }

    /// Variables pruned in step 1, with the linear equation each took away.
    pub fn dropped(&self) -> Vec<(VarId, Poly)> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Dropped)
            .map(|s| (s.var.clone(), s.equation.clone()))
            .collect()
    }

    pub fn eliminated_count(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::Eliminated).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let trace: Vec<serde_json::Value> = self
            .trace()
            .iter()
            .map(|(v, e)| serde_json::json!({"var": v.name(), "expr": poly_terms_json(e)}))
            .collect();
        let dropped: Vec<serde_json::Value> = self
            .dropped()
            .iter()
            .map(|(v, e)| serde_json::json!({"var": v.name(), "eq": poly_terms_json(e)}))
            .collect();
        serde_json::json!({
            "reduced": self.reduced.to_json(),
            "trace": trace,
            "dropped": dropped,
            "verdict": self.verdict.render(),
            "branch_log": self.branch_log,
        })
    }
}

fn poly_terms_json(p: &Poly) -> serde_json::Value {
    let terms: Vec<serde_json::Value> = p
        .terms()
        .iter()
        .map(|(c, m)| {
            let vars: Vec<String> = m.vars().iter().map(|v| v.name()).collect();
            serde_json::json!({"coeff": c, "vars": vars})
        })
        .collect();
    serde_json::Value::Array(terms)
}

/// `equation` is linear in `var` with coefficient +-1; returns the
/// polynomial `var` equals.
fn solved_form(equation: &Poly, var: &VarId) -> Poly {
    let c = equation.linear_coeff(var).expect("unit pivot");
    let rest = equation.substitute(var, &Poly::zero());
    rest.scale(-c)
}

struct Working {
    variables: Vec<VarId>,
    equations: Vec<Equation>,
    steps: Vec<Step>,
    constants: Vec<i64>,
}

impl Working {
    fn occurrences(&self) -> HashMap<&VarId, Vec<usize>> {
        let mut occ: HashMap<&VarId, Vec<usize>> = HashMap::new();
        for (i, eq) in self.equations.iter().enumerate() {
            let mut seen = HashSet::new();
            for v in eq.poly.variables() {
                if seen.insert(v) {
                    occ.entry(v).or_default().push(i);
                }
            }
        }
        occ
    }

    /// Moves nonzero constant equations out, drops duplicates.
    fn sweep(&mut self) {
        let mut seen: HashSet<Poly> = HashSet::new();
        let mut kept = Vec::new();
        for eq in self.equations.drain(..) {
            let poly = eq.poly.canonical_equation();
            match poly.as_constant() {
                Some(0) => continue,
                Some(c) => {
                    self.constants.push(c);
                    continue;
                }
                None => {}
            }
            if seen.insert(poly.clone()) {
                kept.push(Equation { poly, tag: eq.tag });
            }
        }
        self.equations = kept;
    }

    /// Repeatedly removes a variable that occurs, with unit coefficient, in
    /// exactly one equation of degree <= 1 and nowhere else, together with
    /// that equation. Other variables exclusive to the removed equation are
    /// journaled as dropped too, so lifting can restore them.
    fn drop_unused(&mut self) {
        loop {
            let occ = self.occurrences();
            let mut pick: Option<(usize, usize)> = None; // (var position, eq idx)
            for (vi, v) in self.variables.iter().enumerate() {
                if let Some(eqs) = occ.get(v) {
                    if eqs.len() == 1 {
                        let eq = &self.equations[eqs[0]];
                        if eq.poly.degree() <= 1
                            && matches!(eq.poly.linear_coeff(v), Some(1) | Some(-1))
                        {
                            pick = Some((vi, eqs[0]));
                            break;
                        }
                    }
                }
            }
            let Some((vi, ei)) = pick else { break };
            let pivot = self.variables[vi].clone();
            let equation = self.equations.remove(ei).poly;
            self.variables.remove(vi);
            self.steps.push(Step {
                var: pivot.clone(),
                equation: equation.clone(),
                kind: StepKind::Dropped,
            });
            // Companions now orphaned by this removal, in variable order.
            let occ = self.occurrences();
            let mut companions: Vec<VarId> = Vec::new();
            for v in &self.variables {
                if equation.contains_var(v)
                    && !occ.contains_key(v)
                    && matches!(equation.linear_coeff(v), Some(1) | Some(-1))
                {
                    companions.push(v.clone());
                }
            }
            for v in companions {
                self.variables.retain(|x| x != &v);
                self.steps.push(Step {
                    var: v,
                    equation: equation.clone(),
                    kind: StepKind::Dropped,
                });
            }
        }
    }

    /// Picks the unit-coefficient linear pivot occurring in the fewest
    /// equations (ties broken by variable order), eliminates it, and
    /// substitutes everywhere. Returns false at fixpoint.
    fn eliminate_once(&mut self) -> bool {
        let occ = self.occurrences();
        let mut best: Option<(usize, usize)> = None; // (occurrence count, var position)
        for (vi, v) in self.variables.iter().enumerate() {
            let Some(eqs) = occ.get(v) else { continue };
            let has_pivot = eqs.iter().any(|&i| {
                let eq = &self.equations[i];
                eq.poly.degree() <= 1 && matches!(eq.poly.linear_coeff(v), Some(1) | Some(-1))
            });
            if !has_pivot {
                continue;
            }
            let count = eqs.len();
            if best.is_none_or(|(c, _)| count < c) {
                best = Some((count, vi));
            }
        }
        let Some((_, vi)) = best else { return false };
        let pivot = self.variables[vi].clone();
        let ei = self
            .equations
            .iter()
            .position(|eq| {
                eq.poly.degree() <= 1
                    && matches!(eq.poly.linear_coeff(&pivot), Some(1) | Some(-1))
            })
            .expect("pivot equation");
        let equation = self.equations.remove(ei).poly;
        let expr = solved_form(&equation, &pivot);
        for eq in &mut self.equations {
            eq.poly = eq.poly.substitute(&pivot, &expr);
        }
        self.variables.remove(vi);
        self.steps.push(Step {
            var: pivot,
            equation,
            kind: StepKind::Eliminated,
        });
        true
    }

    fn constants_verdict(&self) -> CharVerdict {
        let mut v = CharVerdict::NoConstraint;
        for &c in &self.constants {
            v = v.meet(CharVerdict::from_constant(c));
        }
        v
    }
}

/// Step-1 pruning as a standalone operation. Constant equations are left in
/// place; only `linear_eliminate` moves them into the verdict.
pub fn drop_unused(system: &PolySystem) -> (PolySystem, Vec<(VarId, Poly)>) {
    let mut w = Working {
        variables: system.variables.clone(),
        equations: system.equations.clone(),
        steps: Vec::new(),
        constants: Vec::new(),
    };
    w.drop_unused();
    let reduced = PolySystem {
        variables: w.variables,
        equations: w.equations,
    };
    let dropped = w
        .steps
        .iter()
        .map(|s| (s.var.clone(), s.equation.clone()))
        .collect();
    (reduced, dropped)
}

/// Iterative unit-pivot elimination with interleaved pruning and constant
/// extraction. Unsolvability is a verdict, never an error.
pub fn linear_eliminate(system: &PolySystem) -> SimplifyResult {
    let mut w = Working {
        variables: system.variables.clone(),
        equations: system.equations.clone(),
        steps: Vec::new(),
        constants: Vec::new(),
    };
    loop {
        w.sweep();
        w.drop_unused();
        if !w.eliminate_once() {
            break;
        }
    }
    let verdict = w.constants_verdict();
    SimplifyResult {
        reduced: PolySystem {
            variables: w.variables,
            equations: w.equations,
        },
        verdict,
        branch_log: Vec::new(),
        steps: w.steps,
    }
}

/// A branching candidate: the equation c * M = 0.
#[derive(Clone, Debug)]
struct Candidate {
    coeff: i64,
    monomial_vars: Vec<VarId>,
    /// Index of the source equation when it sits in the system verbatim.
    in_system: Option<usize>,
}

fn single_term_candidate(poly: &Poly, in_system: Option<usize>) -> Option<Candidate> {
    let terms = poly.terms();
    if terms.len() != 1 || terms[0].1.degree() == 0 {
        return None;
    }
    let mut vars: Vec<VarId> = terms[0].1.vars().to_vec();
    vars.dedup();
    Some(Candidate {
        coeff: terms[0].0,
        monomial_vars: vars,
        in_system,
    })
}

/// Pair derivation cutoff: beyond this many equations the quadratic pair
/// scan is skipped and the verdict simply stays coarser.
const PAIR_SCAN_LIMIT: usize = 200;

fn find_candidates(system: &PolySystem) -> (Vec<Candidate>, CharVerdict) {
    let mut cands = Vec::new();
    let mut derived_verdict = CharVerdict::NoConstraint;
    for (i, eq) in system.equations.iter().enumerate() {
        if let Some(c) = single_term_candidate(&eq.poly, Some(i)) {
            cands.push(c);
        }
    }
    // Sums and differences of pairs can isolate a single monomial, the move
    // that turns p + q = 0 and p - q = 0 into 2q = 0.
    if system.equations.len() <= PAIR_SCAN_LIMIT {
        for i in 0..system.equations.len() {
            for j in i + 1..system.equations.len() {
                for combined in [
                    system.equations[i].poly.sub(&system.equations[j].poly),
                    system.equations[i].poly.add(&system.equations[j].poly),
                ] {
                    let combined = combined.canonical_equation();
                    if let Some(c) = combined.as_constant() {
                        if c != 0 {
                            derived_verdict = derived_verdict.meet(CharVerdict::from_constant(c));
                        }
                        continue;
                    }
                    if let Some(c) = single_term_candidate(&combined, None) {
                        cands.push(c);
                    }
                }
            }
        }
    }
    // Candidates that pin the characteristic first, then small monomials.
    cands.sort_by(|a, b| {
        let key = |c: &Candidate| (c.coeff.unsigned_abs() <= 1, c.monomial_vars.len());
        key(a)
            .cmp(&key(b))
            .then_with(|| a.monomial_vars.cmp(&b.monomial_vars))
    });
    (cands, derived_verdict)
}

/// Eliminates to a fixpoint, feeding back any linear equation obtainable as
/// a sum or difference of two current equations (the quadratic parts cancel,
/// leaving a usable pivot or a new constraint). Sound in every
/// characteristic since only unit combinations are taken.
fn saturate(system: &PolySystem, log: &mut Vec<String>, prefix: &str) -> SimplifyResult {
    let mut current = system.clone();
    for _round in 0..32 {
        let elim = linear_eliminate(&current);
        if elim.verdict == CharVerdict::UnsolvableAllFields {
            return elim;
        }
        let eqs = &elim.reduced.equations;
        if eqs.len() > PAIR_SCAN_LIMIT {
            return elim;
        }
        let known: HashSet<Poly> = eqs.iter().map(|e| e.poly.clone()).collect();
        let mut fresh: Vec<Poly> = Vec::new();
        for i in 0..eqs.len() {
            for j in i + 1..eqs.len() {
                for combined in [
                    eqs[i].poly.sub(&eqs[j].poly),
                    eqs[i].poly.add(&eqs[j].poly),
                ] {
                    let combined = combined.canonical_equation();
                    if combined.is_zero()
                        || combined.degree() > 1
                        || combined.as_constant().is_some()
                        || known.contains(&combined)
                        || fresh.contains(&combined)
                    {
                        continue;
                    }
                    fresh.push(combined);
                }
            }
        }
        if fresh.is_empty() {
            return elim;
        }
        log.push(format!(
            "{}derived {} linear equation(s) from pairs",
            prefix,
            fresh.len()
        ));
        let mut next = elim.reduced.clone();
        for poly in fresh {
            next.equations.push(Equation {
                poly,
                tag: "derived:pair".into(),
            });
        }
        current = next;
    }
    linear_eliminate(&current)
}

fn analyze(system: &PolySystem, depth: u32, budget: &mut u32, log: &mut Vec<String>, prefix: &str) -> CharVerdict {
    let elim = saturate(system, log, prefix);
    let base = elim.verdict;
    if base == CharVerdict::UnsolvableAllFields {
        log.push(format!("{}constant contradiction", prefix));
        return base;
    }
    if depth == 0 {
        return base;
    }
    let (cands, derived) = find_candidates(&elim.reduced);
    let base = base.meet(derived);
    if base == CharVerdict::UnsolvableAllFields {
        log.push(format!("{}derived constant contradiction", prefix));
        return base;
    }
    let Some(cand) = cands.into_iter().next() else {
        return base;
    };
    let needed = cand.monomial_vars.len() as u32 + 1;
    if *budget < needed {
        log.push(format!("{}branch budget exhausted", prefix));
        return base;
    }
    *budget -= needed;

    let mono: Vec<String> = cand.monomial_vars.iter().map(|v| v.name()).collect();
    log.push(format!(
        "{}branch on {}*{} = 0",
        prefix,
        cand.coeff,
        mono.join("*")
    ));

    let mut combined = CharVerdict::UnsolvableAllFields;
    for var in &cand.monomial_vars {
        let mut sub = elim.reduced.clone();
        for eq in &mut sub.equations {
            eq.poly = eq.poly.substitute(var, &Poly::zero());
        }
        let verdict = analyze(&sub, depth - 1, budget, log, &format!("{}  [{}=0] ", prefix, var.name()));
        combined = combined.join(verdict);
    }
    if cand.coeff.unsigned_abs() > 1 {
        let mut rest = elim.reduced.clone();
        if let Some(i) = cand.in_system {
            rest.equations.remove(i);
        }
        let verdict = CharVerdict::from_constant(cand.coeff).meet(analyze(
            &rest,
            depth - 1,
            budget,
            log,
            &format!("{}  [char|{}] ", prefix, cand.coeff.unsigned_abs()),
        ));
        combined = combined.join(verdict);
    }
    base.meet(combined)
}

/// Bounded case-split refinement of the characteristic verdict. The verdict
/// never rules out a characteristic that some branch admits; exhausting the
/// budget only leaves the verdict coarser.
pub fn branch_analyze(reduced: &PolySystem, depth: u32, width: u32) -> (CharVerdict, Vec<String>) {
    let mut log = Vec::new();
    let mut budget = width;
    let verdict = analyze(reduced, depth, &mut budget, &mut log, "");
    (verdict, log)
}

/// Full pipeline: prune, eliminate, then refine the verdict by case
/// analysis.
pub fn simplify(system: &PolySystem, depth: u32, width: u32) -> SimplifyResult {
    let mut result = linear_eliminate(system);
    if result.verdict != CharVerdict::UnsolvableAllFields {
        let (verdict, log) = branch_analyze(&result.reduced, depth, width);
        result.verdict = result.verdict.meet(verdict);
        result.branch_log = log;
    }
    result
}

/// Replays the removal journal backwards to extend an assignment of the
/// reduced variables to all original variables, then asserts the original
/// system is satisfied.
pub fn lift_solution(
    result: &SimplifyResult,
    original: &PolySystem,
    field: &FieldSpec,
    partial: &BTreeMap<VarId, FieldElem>,
) -> Result<BTreeMap<VarId, FieldElem>, SimplifyError> {
    if !result.verdict.admits(field.p()) {
        return Err(SimplifyError::InadmissibleCharacteristic(field.p()));
    }
    let mut values: HashMap<VarId, u32> = HashMap::new();
    for (v, e) in partial {
        values.insert(v.clone(), field.index_of(e));
    }
    for v in &result.reduced.variables {
        if !values.contains_key(v) {
            return Err(SimplifyError::LiftInconsistency(format!(
                "partial assignment is missing reduced variable {}",
                v.name()
            )));
        }
    }
    for step in result.steps.iter().rev() {
        let c = step
            .equation
            .linear_coeff(&step.var)
            .expect("journaled pivots have unit coefficients");
        let rest = step.equation.substitute(&step.var, &Poly::zero());
        // Unassigned variables of a pruned equation are free; zero works.
        let r = rest.eval_idx(field, |v| values.get(v).copied().unwrap_or(0));
        let value = if c == 1 { field.neg_idx(r) } else { r };
        values.insert(step.var.clone(), value);
    }
    for eq in &original.equations {
        let r = eq.poly.eval_idx(field, |v| values.get(v).copied().unwrap_or(0));
        if r != 0 {
            return Err(SimplifyError::LiftInconsistency(format!(
                "equation {} evaluates to index {}",
                eq.poly, r
            )));
        }
    }
    let mut out = BTreeMap::new();
    for v in original.variables.iter() {
        let idx = values.get(v).copied().unwrap_or(0);
        out.insert(v.clone(), field.elem_at(idx));
    }
    Ok(out)
}

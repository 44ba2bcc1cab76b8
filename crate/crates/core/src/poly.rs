//! Sparse integer-coefficient polynomials over named variables, and the
//! equation systems built from them.
//!
//! Coefficients stay plain integers until a field is chosen: a conclusion
//! like "2 = 0" must survive canonicalization so characteristic analysis can
//! see it. Equations are stored as LHS - RHS = 0 with the leading coefficient
//! normalized positive, which makes canonical forms directly comparable.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::FieldSpec;
use crate::network::EdgeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("equation references variable {0:?} missing from the variable list")]
    UnknownVariable(String),
    #[error("cannot parse polynomial system: {0}")]
    Parse(String),
}

/// A variable: a path gain, an edge-to-edge gain, or an opaque name from an
/// externally supplied system file.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// Gain of the k-th path from source i into the tree of sink j.
    PathGain { source: u32, tree: u32, copy: u32 },
    /// Gain applied to the flow of `from` when forming the flow of `to`.
    EdgeGain { from: EdgeId, to: EdgeId },
    Named(String),
}

impl VarId {
    pub fn name(&self) -> String {
        match self {
            VarId::PathGain { source, tree, copy } => format!("g{}_{}_{}", source, tree, copy),
            VarId::EdgeGain { from, to } => format!("a({},{})", from.0, to.0),
            VarId::Named(s) => s.clone(),
        }
    }

    /// Inverse of `name`; unrecognized spellings become `Named`.
    pub fn from_name(name: &str) -> VarId {
        if let Some(rest) = name.strip_prefix('g') {
            let parts: Vec<&str> = rest.split('_').collect();
            if parts.len() == 3 {
                if let (Ok(i), Ok(j), Ok(k)) =
                    (parts[0].parse(), parts[1].parse(), parts[2].parse())
                {
                    return VarId::PathGain {
                        source: i,
                        tree: j,
                        copy: k,
                    };
                }
            }
        }
        if let Some(inner) = name.strip_prefix("a(").and_then(|s| s.strip_suffix(')')) {
            if let Some((from, to)) = inner.split_once(',') {
                return VarId::EdgeGain {
                    from: EdgeId(from.to_string()),
                    to: EdgeId(to.to_string()),
                };
            }
        }
        VarId::Named(name.to_string())
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl Serialize for VarId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for VarId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(VarId::from_name(&s))
    }
}

/// A sorted multiset of variables; the empty monomial is the constant 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<VarId>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Monomial {
        Monomial(vec![v])
    }

    pub fn from_vars(mut vars: Vec<VarId>) -> Monomial {
        vars.sort();
        Monomial(vars)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn contains(&self, v: &VarId) -> bool {
        self.0.iter().any(|x| x == v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut vars = self.0.clone();
        vars.extend(other.0.iter().cloned());
        vars.sort();
        Monomial(vars)
    }
}

/// Monomial comparison for term ordering: higher degree first, then
/// lexicographic on the sorted variable lists.
fn term_order(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    b.degree().cmp(&a.degree()).then_with(|| a.0.cmp(&b.0))
}

/// A canonical sparse polynomial: sorted unique monomials, nonzero integer
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<(i64, Monomial)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: i64) -> Poly {
        Poly::from_terms(vec![(c, Monomial::one())])
    }

    pub fn var(v: VarId) -> Poly {
        Poly::from_terms(vec![(1, Monomial::var(v))])
    }

    pub fn from_terms(terms: Vec<(i64, Monomial)>) -> Poly {
        let mut map: BTreeMap<Vec<VarId>, i64> = BTreeMap::new();
        for (c, m) in terms {
            let slot = map.entry(m.0).or_insert(0);
            *slot = slot.checked_add(c).expect("coefficient overflow");
        }
        let mut terms: Vec<(i64, Monomial)> = map
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(m, c)| (c, Monomial(m)))
            .collect();
        terms.sort_by(|a, b| term_order(&a.1, &b.1));
        Poly { terms }
    }

    pub fn terms(&self) -> &[(i64, Monomial)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) when the polynomial is the constant c (including 0).
    pub fn as_constant(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 if self.terms[0].1.degree() == 0 => Some(self.terms[0].0),
            _ => None,
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly::from_terms(terms)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(c, m)| (-c, m.clone())).collect(),
        }
    }

    pub fn scale(&self, k: i64) -> Poly {
        if k == 0 {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(c, m)| (c.checked_mul(k).expect("coefficient overflow"), m.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (c1, m1) in &self.terms {
            for (c2, m2) in &other.terms {
                terms.push((c1.checked_mul(*c2).expect("coefficient overflow"), m1.mul(m2)));
            }
        }
        Poly::from_terms(terms)
    }

    pub fn variables(&self) -> impl Iterator<Item = &VarId> {
        self.terms.iter().flat_map(|(_, m)| m.vars().iter())
    }

    pub fn contains_var(&self, v: &VarId) -> bool {
        self.terms.iter().any(|(_, m)| m.contains(v))
    }

    /// Coefficient of `v` when the polynomial is linear in `v` (v appears only
    /// in degree-1 monomials of its own); None if v appears in any product.
    pub fn linear_coeff(&self, v: &VarId) -> Option<i64> {
        let mut coeff = None;
        for (c, m) in &self.terms {
            let count = m.vars().iter().filter(|x| *x == v).count();
            match (count, m.degree()) {
                (0, _) => {}
                (1, 1) => coeff = Some(*c),
                _ => return None,
            }
        }
        coeff
    }

    /// Replaces `v` by `replacement` everywhere. Substituting a linear form
    /// never raises the degree of a degree <= 2 polynomial.
    pub fn substitute(&self, v: &VarId, replacement: &Poly) -> Poly {
        let mut out = Vec::new();
        for (c, m) in &self.terms {
            let count = m.vars().iter().filter(|x| *x == v).count();
            if count == 0 {
                out.push((*c, m.clone()));
                continue;
            }
            let rest = Monomial(m.vars().iter().filter(|x| *x != v).cloned().collect());
            let mut piece = Poly::from_terms(vec![(*c, rest)]);
            for _ in 0..count {
                piece = piece.mul(replacement);
            }
            out.extend(piece.terms);
        }
        Poly::from_terms(out)
    }

    /// Normalizes the overall sign so the leading term is positive: the
    /// canonical form under which equations are deduplicated.
    pub fn canonical_equation(&self) -> Poly {
        match self.terms.first() {
            Some((c, _)) if *c < 0 => self.neg(),
            _ => self.clone(),
        }
    }

    /// Evaluates under a field and an index-valued assignment.
    pub fn eval_idx<F>(&self, field: &FieldSpec, mut value_of: F) -> u32
    where
        F: FnMut(&VarId) -> u32,
    {
        let mut acc = 0u32;
        for (c, m) in &self.terms {
            let mut t = field.from_int_idx(*c);
            for v in m.vars() {
                if t == 0 {
                    break;
                }
                t = field.mul_idx(t, value_of(v));
            }
            acc = field.add_idx(acc, t);
        }
        acc
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, m)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if *c < 0 {
                    write!(f, "-")?;
                }
            } else if *c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = m.vars().iter().map(|v| v.name()).collect();
            if vars.is_empty() {
                write!(f, "{}", mag)?;
            } else if mag == 1 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// One equation `poly = 0` with a provenance tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub poly: Poly,
    pub tag: String,
}

/// An ordered system of polynomial equations.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolySystem {
    pub variables: Vec<VarId>,
    pub equations: Vec<Equation>,
}

impl PolySystem {
    /// Builds a system from raw equations: canonicalizes signs, drops zero
    /// polynomials, deduplicates canonical forms, keeps first-seen order.
    pub fn new(variables: Vec<VarId>, equations: Vec<Equation>) -> PolySystem {
        let mut seen: HashSet<Poly> = HashSet::new();
        let mut kept = Vec::new();
        for eq in equations {
            let poly = eq.poly.canonical_equation();
            if poly.is_zero() {
                continue;
            }
            if seen.insert(poly.clone()) {
                kept.push(Equation { poly, tag: eq.tag });
            }
        }
        PolySystem {
            variables,
            equations: kept,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.equations.iter().map(|e| e.poly.degree()).max().unwrap_or(0)
    }

    pub fn linear_count(&self) -> usize {
        self.equations.iter().filter(|e| e.poly.degree() <= 1).count()
    }

    pub fn quadratic_count(&self) -> usize {
        self.equations.iter().filter(|e| e.poly.degree() == 2).count()
    }

    /// Render every equation as "lhs = 0" lines.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for eq in &self.equations {
            out.push_str(&format!("{} = 0\n", eq.poly));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc: SystemDoc = self.into();
        serde_json::to_value(doc).expect("system serialization")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<PolySystem, PolyError> {
        let doc: SystemDoc = serde_json::from_value(value.clone())
            .map_err(|e| PolyError::Parse(e.to_string()))?;
        PolySystem::try_from(doc)
    }
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    coeff: i64,
    vars: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct EquationDoc {
    terms: Vec<TermDoc>,
    tag: String,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    variables: Vec<String>,
    equations: Vec<EquationDoc>,
}

impl From<&PolySystem> for SystemDoc {
    fn from(sys: &PolySystem) -> SystemDoc {
        SystemDoc {
            variables: sys.variables.iter().map(|v| v.name()).collect(),
            equations: sys
                .equations
                .iter()
                .map(|eq| EquationDoc {
                    terms: eq
                        .poly
                        .terms()
                        .iter()
                        .map(|(c, m)| TermDoc {
                            coeff: *c,
                            vars: m.vars().iter().map(|v| v.name()).collect(),
                        })
                        .collect(),
                    tag: eq.tag.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<SystemDoc> for PolySystem {
    type Error = PolyError;

    fn try_from(doc: SystemDoc) -> Result<PolySystem, PolyError> {
        let variables: Vec<VarId> = doc.variables.iter().map(|s| VarId::from_name(s)).collect();
        let known: HashSet<&VarId> = variables.iter().collect();
        let mut equations = Vec::new();
        for eq in doc.equations {
            let mut terms = Vec::new();
            for t in eq.terms {
                let vars: Vec<VarId> = t.vars.iter().map(|s| VarId::from_name(s)).collect();
                for v in &vars {
                    if !known.contains(v) {
                        return Err(PolyError::UnknownVariable(v.name()));
                    }
                }
                terms.push((t.coeff, Monomial::from_vars(vars)));
            }
            equations.push(Equation {
                poly: Poly::from_terms(terms),
                tag: eq.tag,
            });
        }
        Ok(PolySystem::new(variables, equations))
    }
}

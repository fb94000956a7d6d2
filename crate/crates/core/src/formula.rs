//! Formulas over finite models.
//!
//! The JSON encoding is externally tagged:
//!
//! ```json
//! {"and": [
//!   {"card": {"set": {"name": "dog"}, "op": "eq", "value": 6}},
//!   {"subset": ["run", "dog"]},
//!   {"quant": {"kind": "more_than", "k": 5, "restrictor": "guy", "scope": "chase"}},
//!   {"not": {"disjoint": ["blue", "red"]}}
//! ]}
//! ```

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantics::{eval_model, FiniteModel, Quantifier, QuantifierKind};

/// Default maximum universe size explored by the oracle.
pub const DEFAULT_UNIVERSE_BOUND: u32 = 24;

/// Region masks are `u64`, so at most 2^6 Venn regions.
pub const MAX_SETS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetExpr {
    Name(String),
    Intersect(Vec<SetExpr>),
    Union(Vec<SetExpr>),
    /// First operand minus every later operand.
    Diff(Vec<SetExpr>),
}

impl SetExpr {
    pub fn name(n: impl Into<String>) -> Self {
        SetExpr::Name(n.into())
    }

    fn children(&self) -> &[SetExpr] {
        match self {
            SetExpr::Name(_) => &[],
            SetExpr::Intersect(c) | SetExpr::Union(c) | SetExpr::Diff(c) => c,
        }
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SetExpr::Name(n) => out.push(n),
            _ => self.children().iter().for_each(|c| c.collect_names(out)),
        }
    }

    fn validate(&self, declared: &HashSet<&str>) -> Result<()> {
        match self {
            SetExpr::Name(n) if declared.contains(n.as_str()) => Ok(()),
            SetExpr::Name(n) => Err(Error::NamedSetMissing(n.clone())),
            _ if self.children().is_empty() => {
                Err(Error::InvalidFormula("set operation with no operands".into()))
            }
            _ => self.children().iter().try_for_each(|c| c.validate(declared)),
        }
    }

    pub fn eval(&self, m: &FiniteModel) -> Result<BTreeSet<u32>> {
        let mut operands = self.children().iter().map(|c| c.eval(m));
        match self {
            SetExpr::Name(n) => Ok(m.set(n)?.clone()),
            SetExpr::Intersect(_) => {
                let mut acc = first_operand(&mut operands)?;
                for s in operands {
                    let s = s?;
                    acc.retain(|e| s.contains(e));
                }
                Ok(acc)
            }
            SetExpr::Union(_) => {
                let mut acc = first_operand(&mut operands)?;
                for s in operands {
                    acc.extend(s?);
                }
                Ok(acc)
            }
            SetExpr::Diff(_) => {
                let mut acc = first_operand(&mut operands)?;
                for s in operands {
                    let s = s?;
                    acc.retain(|e| !s.contains(e));
                }
                Ok(acc)
            }
        }
    }
}

fn first_operand(
    it: &mut impl Iterator<Item = Result<BTreeSet<u32>>>,
) -> Result<BTreeSet<u32>> {
    it.next()
        .unwrap_or_else(|| Err(Error::InvalidFormula("set operation with no operands".into())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CardOp {
    Eq,
    Le,
    Ge,
}

impl CardOp {
    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            CardOp::Eq => lhs == rhs,
            CardOp::Le => lhs <= rhs,
            CardOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantAtom {
    #[serde(flatten)]
    pub quantifier: Quantifier,
    pub restrictor: String,
    pub scope: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CardConstraint {
    pub set: SetExpr,
    pub op: CardOp,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Quant(QuantAtom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Card(CardConstraint),
    /// `Subset(sub, super)`: every member of `sub` belongs to `super`.
    Subset(String, String),
    Disjoint(String, String),
}

impl Formula {
    pub fn quant(q: Quantifier, restrictor: impl Into<String>, scope: impl Into<String>) -> Self {
        Formula::Quant(QuantAtom { quantifier: q, restrictor: restrictor.into(), scope: scope.into() })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn card(set: SetExpr, op: CardOp, value: u64) -> Self {
        Formula::Card(CardConstraint { set, op, value })
    }

    pub fn subset(sub: impl Into<String>, sup: impl Into<String>) -> Self {
        Formula::Subset(sub.into(), sup.into())
    }

    pub fn disjoint(a: impl Into<String>, b: impl Into<String>) -> Self {
        Formula::Disjoint(a.into(), b.into())
    }

    /// Every set name referenced, in first-occurrence order.
    pub fn set_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        let mut seen = HashSet::new();
        out.retain(|n| seen.insert(*n));
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Quant(a) => {
                out.push(&a.restrictor);
                out.push(&a.scope);
            }
            Formula::Not(f) => f.collect_names(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_names(out)),
            Formula::Card(c) => c.set.collect_names(out),
            Formula::Subset(a, b) | Formula::Disjoint(a, b) => {
                out.push(a);
                out.push(b);
            }
        }
    }

    /// Quantifier categories occurring anywhere in the formula.
    pub fn quantifier_kinds(&self) -> BTreeSet<QuantifierKind> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Quant(a) = f {
                out.insert(a.quantifier.kind());
            }
        });
        out
    }

    fn visit(&self, v: &mut impl FnMut(&Formula)) {
        v(self);
        match self {
            Formula::Not(f) => f.visit(v),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit(v)),
            _ => {}
        }
    }

    /// Top-level conjuncts, with nested `And`s flattened.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            f => vec![f],
        }
    }

    pub fn validate(&self, sig: &Signature) -> Result<()> {
        let declared: HashSet<&str> = sig.set_names.iter().map(String::as_str).collect();
        self.validate_in(&declared)
    }

    fn validate_in(&self, declared: &HashSet<&str>) -> Result<()> {
        let check = |n: &str| {
            if declared.contains(n) {
                Ok(())
            } else {
                Err(Error::NamedSetMissing(n.to_string()))
            }
        };
        match self {
            Formula::Quant(a) => {
                check(&a.restrictor)?;
                check(&a.scope)
            }
            Formula::Not(f) => f.validate_in(declared),
            Formula::And(fs) | Formula::Or(fs) => {
                if fs.is_empty() {
                    return Err(Error::InvalidFormula("and/or needs at least one child".into()));
                }
                fs.iter().try_for_each(|f| f.validate_in(declared))
            }
            Formula::Card(c) => c.set.validate(declared),
            Formula::Subset(a, b) | Formula::Disjoint(a, b) => {
                check(a)?;
                check(b)
            }
        }
    }
}

/// Evaluates `f` in a materialized model.
pub fn satisfies(m: &FiniteModel, f: &Formula) -> Result<bool> {
    match f {
        Formula::Quant(a) => eval_model(&a.quantifier, &a.restrictor, &a.scope, m),
        Formula::Not(g) => Ok(!satisfies(m, g)?),
        Formula::And(fs) => {
            if fs.is_empty() {
                return Err(Error::InvalidFormula("and/or needs at least one child".into()));
            }
            for g in fs {
                if !satisfies(m, g)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(fs) => {
            if fs.is_empty() {
                return Err(Error::InvalidFormula("and/or needs at least one child".into()));
            }
            for g in fs {
                if satisfies(m, g)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Card(c) => Ok(c.op.holds(c.set.eval(m)?.len() as u64, c.value)),
        Formula::Subset(a, b) => Ok(m.set(a)?.is_subset(m.set(b)?)),
        Formula::Disjoint(a, b) => Ok(m.set(a)?.is_disjoint(m.set(b)?)),
    }
}

/// The declared sets and the largest universe the oracle explores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct Signature {
    set_names: Vec<String>,
    universe_bound: u32,
}

#[derive(Deserialize)]
struct RawSignature {
    set_names: Vec<String>,
    #[serde(default = "default_bound")]
    universe_bound: u32,
}

fn default_bound() -> u32 {
    DEFAULT_UNIVERSE_BOUND
}

impl TryFrom<RawSignature> for Signature {
    type Error = Error;

    fn try_from(raw: RawSignature) -> Result<Self> {
        Signature::new(raw.set_names, raw.universe_bound)
    }
}

impl Signature {
    pub fn new<S: Into<String>>(
        set_names: impl IntoIterator<Item = S>,
        universe_bound: u32,
    ) -> Result<Self> {
        let set_names: Vec<String> = set_names.into_iter().map(Into::into).collect();
        if set_names.is_empty() {
            return Err(Error::InvalidSignature("no sets declared".into()));
        }
        if set_names.len() > MAX_SETS {
            return Err(Error::InvalidSignature(format!(
                "{} sets declared, at most {MAX_SETS} supported",
                set_names.len()
            )));
        }
        if universe_bound == 0 {
            return Err(Error::InvalidSignature("universe bound must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = set_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::DuplicateSet(dup.clone()));
        }
        Ok(Signature { set_names, universe_bound })
    }

    pub fn set_names(&self) -> &[String] {
        &self.set_names
    }

    pub fn universe_bound(&self) -> u32 {
        self.universe_bound
    }

    pub fn with_bound(&self, universe_bound: u32) -> Result<Self> {
        Signature::new(self.set_names.clone(), universe_bound)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.set_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::NamedSetMissing(name.to_string()))
    }

    /// Number of Venn regions, `2^s`.
    pub fn region_count(&self) -> usize {
        1 << self.set_names.len()
    }
}

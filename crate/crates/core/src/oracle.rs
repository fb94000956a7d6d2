//! Bounded satisfiability and three-way entailment labeling.
//!
//! The oracle searches region vectors (see [`crate::region`]) rather than
//! labeled models. Before searching, the top-level conjuncts of the formula
//! are turned into linear bounds on region sums: subset and disjointness
//! constraints empty whole regions, cardinality constraints and counting
//! quantifiers bound partial sums. The depth-first search visits regions in
//! index order and values in ascending order, so vectors are produced in
//! lexicographic order and the first hit is the lexicographically smallest
//! satisfying vector. Region 0 (elements outside every declared set) is
//! never observable by a formula and is held at zero.
//!
//! Every label is a bounded judgment: `entailment` means no premise model
//! with at most `bound_used` elements falsifies the hypothesis.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{CardOp, Formula, Signature};
use crate::region::{expr_mask, materialize, set_mask, vector_count, Compiled, DEFAULT_WORK_LIMIT};
use crate::semantics::{FiniteModel, QuantifierKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Case-insensitive label names.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entailment" => Ok(Label::Entailment),
            "contradiction" => Ok(Label::Contradiction),
            "neutral" => Ok(Label::Neutral),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Result of [`Oracle::label`].
///
/// `witness_premise_model` satisfies premise and hypothesis;
/// `witness_counter_model` satisfies the premise and falsifies the hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliLabel {
    pub label: Label,
    pub bound_used: u32,
    pub witness_premise_model: Option<FiniteModel>,
    pub witness_counter_model: Option<FiniteModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Oracle {
    pub work_limit: u128,
    /// Split the search on the first free region and check slices concurrently.
    pub parallel: bool,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { work_limit: DEFAULT_WORK_LIMIT, parallel: true }
    }
}

#[derive(Debug, Clone)]
struct SumBound {
    mask: u64,
    lo: u64,
    hi: u64,
    /// Position in `free` of the last free region under `mask`.
    last: usize,
}

/// The search space left after propagating a formula's top-level conjuncts.
#[derive(Debug, Clone)]
struct Plan {
    len: usize,
    bound: u32,
    free: Vec<usize>,
    /// For each position in `free`, the bounds whose mask covers that region.
    touching: Vec<Vec<usize>>,
    bounds: Vec<SumBound>,
    infeasible: bool,
}

impl Plan {
    fn new(f: &Formula, sig: &Signature) -> Result<Self> {
        let mut zero: u64 = 1; // region 0
        let mut raw: Vec<(u64, u64, u64)> = Vec::new();
        let mut infeasible = false;
        for c in f.conjuncts() {
            match c {
                Formula::Subset(a, b) => zero |= set_mask(sig, a)? & !set_mask(sig, b)?,
                Formula::Disjoint(a, b) => zero |= set_mask(sig, a)? & set_mask(sig, b)?,
                Formula::Card(cc) => {
                    let mask = expr_mask(sig, &cc.set)?;
                    match cc.op {
                        CardOp::Eq => raw.push((mask, cc.value, cc.value)),
                        CardOp::Le => raw.push((mask, 0, cc.value)),
                        CardOp::Ge => raw.push((mask, cc.value, u64::MAX)),
                    }
                }
                Formula::Quant(atom) => {
                    let a = set_mask(sig, &atom.restrictor)?;
                    let b = set_mask(sig, &atom.scope)?;
                    let q = atom.quantifier;
                    let k = q.k().unwrap_or(0);
                    match q.kind() {
                        QuantifierKind::Some => raw.push((a & b, 1, u64::MAX)),
                        QuantifierKind::All => zero |= a & !b,
                        QuantifierKind::Exactly => raw.push((a & b, k, k)),
                        QuantifierKind::MoreThan => raw.push((a & b, k.saturating_add(1), u64::MAX)),
                        QuantifierKind::LessThan | QuantifierKind::Between if k == 0 => {
                            infeasible = true
                        }
                        QuantifierKind::LessThan => raw.push((a & b, 0, k - 1)),
                        QuantifierKind::Between => {
                            raw.push((a & b, q.p().unwrap_or(0).saturating_add(1), k - 1))
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        for &(mask, lo, hi) in &raw {
            if hi == 0 {
                zero |= mask;
            }
            if lo > hi {
                infeasible = true;
            }
        }
        let len = sig.region_count();
        let free: Vec<usize> = (0..len).filter(|r| zero >> r & 1 == 0).collect();
        let mut bounds = Vec::new();
        for (mask, lo, hi) in raw {
            let mask = mask & !zero;
            match free.iter().rposition(|&r| mask >> r & 1 == 1) {
                Some(last) => bounds.push(SumBound { mask, lo, hi, last }),
                None if lo > 0 => infeasible = true,
                None => {}
            }
        }
        let touching = free
            .iter()
            .map(|&r| (0..bounds.len()).filter(|&i| bounds[i].mask >> r & 1 == 1).collect())
            .collect();
        Ok(Plan { len, bound: sig.universe_bound(), free, touching, bounds, infeasible })
    }

    fn size(&self) -> u128 {
        vector_count(self.free.len(), self.bound)
    }

    /// Visits, in lexicographic order, every vector that respects the plan and
    /// whose first free region takes a value in `first`.
    fn search<F>(&self, first: std::ops::RangeInclusive<u32>, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if self.infeasible {
            return ControlFlow::Continue(());
        }
        let mut v = vec![0u32; self.len];
        let mut partial = vec![0u64; self.bounds.len()];
        if self.free.is_empty() {
            return visit(&v);
        }
        self.descend(0, self.bound, Some(first), &mut v, &mut partial, visit)
    }

    fn descend<F>(
        &self,
        depth: usize,
        remaining: u32,
        range: Option<std::ops::RangeInclusive<u32>>,
        v: &mut [u32],
        partial: &mut [u64],
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if depth == self.free.len() {
            return visit(v);
        }
        let region = self.free[depth];
        let (lo, hi) = match &range {
            Some(r) => (*r.start(), (*r.end()).min(remaining)),
            None => (0, remaining),
        };
        let touching = &self.touching[depth];
        let base: Vec<u64> = touching.iter().map(|&i| partial[i]).collect();
        let mut flow = ControlFlow::Continue(());
        'values: for x in lo..=hi {
            let mut skip = false;
            for (j, &i) in touching.iter().enumerate() {
                let sum = base[j] + x as u64;
                let b = &self.bounds[i];
                if sum > b.hi {
                    break 'values;
                }
                if b.last == depth && sum < b.lo {
                    skip = true;
                }
                partial[i] = sum;
            }
            if skip {
                continue;
            }
            v[region] = x;
            flow = self.descend(depth + 1, remaining - x, None, v, partial, visit);
            if flow.is_break() {
                break;
            }
        }
        v[region] = 0;
        for (j, &i) in touching.iter().enumerate() {
            partial[i] = base[j];
        }
        flow
    }
}

#[derive(Debug, Default)]
struct Outcome {
    premise: Option<Vec<u32>>,
    joint: Option<Vec<u32>>,
    counter: Option<Vec<u32>>,
}

impl Oracle {
    pub fn new(work_limit: u128) -> Self {
        Oracle { work_limit, ..Oracle::default() }
    }

    pub fn sequential(self) -> Self {
        Oracle { parallel: false, ..self }
    }

    fn plan(&self, premise: &Formula, sig: &Signature) -> Result<Plan> {
        let plan = Plan::new(premise, sig)?;
        let required = plan.size();
        if required > self.work_limit {
            return Err(Error::SearchSpaceTooLarge { required, limit: self.work_limit });
        }
        Ok(plan)
    }

    /// Runs `check` on every slice and keeps, per slot, the witness from the
    /// lowest slice that produced one.
    fn run<F>(&self, plan: &Plan, check: F) -> Outcome
    where
        F: Fn(&[u32], &mut Outcome) -> ControlFlow<()> + Sync,
    {
        let slice = |first: std::ops::RangeInclusive<u32>| {
            let mut out = Outcome::default();
            let _ = plan.search(first, &mut |v| check(v, &mut out));
            out
        };
        if !self.parallel || plan.free.is_empty() {
            return slice(0..=plan.bound);
        }
        let parts: Vec<Outcome> = (0..=plan.bound).into_par_iter().map(|x| slice(x..=x)).collect();
        parts.into_iter().fold(Outcome::default(), |mut acc, p| {
            acc.premise = acc.premise.or(p.premise);
            acc.joint = acc.joint.or(p.joint);
            acc.counter = acc.counter.or(p.counter);
            acc
        })
    }

    /// The lexicographically first model of `f` within the signature's bound.
    pub fn is_satisfiable(&self, f: &Formula, sig: &Signature) -> Result<Option<FiniteModel>> {
        let compiled = Compiled::new(f, sig)?;
        let plan = self.plan(f, sig)?;
        let out = self.run(&plan, |v, out| {
            if compiled.eval(v) {
                out.premise = Some(v.to_vec());
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        Ok(out.premise.map(|v| materialize(&v, sig)))
    }

    /// Labels `premise ⇒ hypothesis` over every model within the bound.
    pub fn label(&self, premise: &Formula, hypothesis: &Formula, sig: &Signature) -> Result<NliLabel> {
        let p = Compiled::new(premise, sig)?;
        let h = Compiled::new(hypothesis, sig)?;
        let plan = self.plan(premise, sig)?;
        let out = self.run(&plan, |v, out| {
            if !p.eval(v) {
                return ControlFlow::Continue(());
            }
            let slot = if h.eval(v) { &mut out.joint } else { &mut out.counter };
            if slot.is_none() {
                *slot = Some(v.to_vec());
            }
            if out.joint.is_some() && out.counter.is_some() {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        let label = match (&out.joint, &out.counter) {
            (None, None) => return Err(Error::UnsatisfiablePremise { bound: sig.universe_bound() }),
            (Some(_), None) => Label::Entailment,
            (None, Some(_)) => Label::Contradiction,
            (Some(_), Some(_)) => Label::Neutral,
        };
        Ok(NliLabel {
            label,
            bound_used: sig.universe_bound(),
            witness_premise_model: out.joint.map(|v| materialize(&v, sig)),
            witness_counter_model: out.counter.map(|v| materialize(&v, sig)),
        })
    }
}

/// [`Oracle::is_satisfiable`] with the default work limit.
pub fn is_satisfiable(f: &Formula, sig: &Signature) -> Result<Option<FiniteModel>> {
    Oracle::default().is_satisfiable(f, sig)
}

/// [`Oracle::label`] with the default work limit.
pub fn nli_label(premise: &Formula, hypothesis: &Formula, sig: &Signature) -> Result<NliLabel> {
    Oracle::default().label(premise, hypothesis, sig)
}

/// One labeling job as stored in formula fixture files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTask {
    pub uid: String,
    pub premise_formula: Formula,
    pub hypothesis_formula: Formula,
    pub signature: Signature,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<Label>,
}

impl LabelTask {
    /// Labels the task, optionally overriding the signature's bound.
    pub fn run(&self, oracle: &Oracle, bound: Option<u32>) -> Result<NliLabel> {
        let sig = match bound {
            Some(b) => self.signature.with_bound(b)?,
            None => self.signature.clone(),
        };
        oracle.label(&self.premise_formula, &self.hypothesis_formula, &sig)
    }
}

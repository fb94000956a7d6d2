//! Venn-region compression of finite models.
//!
//! With `s` declared sets a model's quantifier-relevant content is the vector
//! of its `2^s` region cardinalities. Region `r` holds the elements that are
//! in set `i` exactly when bit `i` of `r` is set; region 0 holds elements in
//! no declared set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{CardOp, Formula, SetExpr, Signature};
use crate::semantics::{CardinalityPair, FiniteModel, Quantifier};

/// Default cap on the number of region vectors a single search may visit.
pub const DEFAULT_WORK_LIMIT: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionVector {
    counts: Vec<u32>,
}

impl RegionVector {
    pub fn new(counts: Vec<u32>, sig: &Signature) -> Result<Self> {
        if counts.len() != sig.region_count() {
            return Err(Error::InvalidFormula(format!(
                "region vector has {} entries, signature needs {}",
                counts.len(),
                sig.region_count()
            )));
        }
        Ok(RegionVector { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// The canonical model with these region cardinalities: elements are
    /// numbered consecutively, region by region.
    pub fn materialize(&self, sig: &Signature) -> FiniteModel {
        materialize(&self.counts, sig)
    }
}

pub(crate) fn materialize(counts: &[u32], sig: &Signature) -> FiniteModel {
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); sig.set_names().len()];
    let mut next = 0u32;
    for (region, &count) in counts.iter().enumerate() {
        for e in next..next + count {
            for (i, m) in members.iter_mut().enumerate() {
                if region >> i & 1 == 1 {
                    m.push(e);
                }
            }
        }
        next += count;
    }
    let mut model = FiniteModel::new(next);
    for (name, elems) in sig.set_names().iter().zip(members) {
        model.insert_set(name.clone(), elems).expect("names unique, elements in range");
    }
    model
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) / i stays integral at every step
        acc = match acc.checked_mul(n as u128 - k as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of vectors of `len` non-negative integers with sum at most `bound`.
pub fn vector_count(len: usize, bound: u32) -> u128 {
    binomial(bound as u64 + len as u64, len as u64)
}

/// Lexicographic stream of every region vector of `sig`.
pub fn enumerate_region_vectors(sig: &Signature, work_limit: u128) -> Result<RegionVectors> {
    let len = sig.region_count();
    let required = vector_count(len, sig.universe_bound());
    if required > work_limit {
        return Err(Error::SearchSpaceTooLarge { required, limit: work_limit });
    }
    Ok(RegionVectors { current: Some(vec![0; len]), sum: 0, bound: sig.universe_bound() })
}

#[derive(Debug, Clone)]
pub struct RegionVectors {
    current: Option<Vec<u32>>,
    sum: u32,
    bound: u32,
}

impl Iterator for RegionVectors {
    type Item = RegionVector;

    fn next(&mut self) -> Option<RegionVector> {
        let out = self.current.clone()?;
        let v = self.current.as_mut().expect("checked above");
        let last = v.len() - 1;
        if self.sum < self.bound {
            v[last] += 1;
            self.sum += 1;
        } else {
            match v.iter().rposition(|&c| c > 0) {
                Some(j) if j > 0 => {
                    self.sum = self.sum - v[j] + 1;
                    v[j] = 0;
                    v[j - 1] += 1;
                }
                _ => self.current = None,
            }
        }
        Some(RegionVector { counts: out })
    }
}

/// A formula with every set expression resolved to a bitmask of regions.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Quant { q: Quantifier, a_only: u64, a_and_b: u64 },
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Card { mask: u64, op: CardOp, value: u64 },
    /// Subset and disjointness: the masked regions are all empty.
    Empty(u64),
}

pub(crate) fn set_mask(sig: &Signature, name: &str) -> Result<u64> {
    let i = sig.index_of(name)?;
    Ok((0..sig.region_count()).filter(|r| r >> i & 1 == 1).fold(0, |m, r| m | 1 << r))
}

pub(crate) fn expr_mask(sig: &Signature, e: &SetExpr) -> Result<u64> {
    let operands = |cs: &[SetExpr]| -> Result<Vec<u64>> {
        if cs.is_empty() {
            return Err(Error::InvalidFormula("set operation with no operands".into()));
        }
        cs.iter().map(|c| expr_mask(sig, c)).collect()
    };
    Ok(match e {
        SetExpr::Name(n) => set_mask(sig, n)?,
        SetExpr::Intersect(cs) => operands(cs)?.into_iter().fold(u64::MAX, |a, m| a & m),
        SetExpr::Union(cs) => operands(cs)?.into_iter().fold(0, |a, m| a | m),
        SetExpr::Diff(cs) => {
            let ms = operands(cs)?;
            ms[1..].iter().fold(ms[0], |a, m| a & !m)
        }
    })
}

impl Compiled {
    pub(crate) fn new(f: &Formula, sig: &Signature) -> Result<Self> {
        f.validate(sig)?;
        Self::build(f, sig)
    }

    fn build(f: &Formula, sig: &Signature) -> Result<Self> {
        Ok(match f {
            Formula::Quant(atom) => {
                let a = set_mask(sig, &atom.restrictor)?;
                let b = set_mask(sig, &atom.scope)?;
                Compiled::Quant { q: atom.quantifier, a_only: a & !b, a_and_b: a & b }
            }
            Formula::Not(g) => Compiled::Not(Box::new(Self::build(g, sig)?)),
            Formula::And(fs) => {
                Compiled::And(fs.iter().map(|g| Self::build(g, sig)).collect::<Result<_>>()?)
            }
            Formula::Or(fs) => {
                Compiled::Or(fs.iter().map(|g| Self::build(g, sig)).collect::<Result<_>>()?)
            }
            Formula::Card(c) => {
                Compiled::Card { mask: expr_mask(sig, &c.set)?, op: c.op, value: c.value }
            }
            Formula::Subset(a, b) => Compiled::Empty(set_mask(sig, a)? & !set_mask(sig, b)?),
            Formula::Disjoint(a, b) => Compiled::Empty(set_mask(sig, a)? & set_mask(sig, b)?),
        })
    }

    pub(crate) fn eval(&self, v: &[u32]) -> bool {
        match self {
            Compiled::Quant { q, a_only, a_and_b } => q.holds(CardinalityPair {
                a_only: masked_sum(v, *a_only),
                a_and_b: masked_sum(v, *a_and_b),
            }),
            Compiled::Not(g) => !g.eval(v),
            Compiled::And(gs) => gs.iter().all(|g| g.eval(v)),
            Compiled::Or(gs) => gs.iter().any(|g| g.eval(v)),
            Compiled::Card { mask, op, value } => op.holds(masked_sum(v, *mask), *value),
            Compiled::Empty(mask) => masked_sum(v, *mask) == 0,
        }
    }
}

pub(crate) fn masked_sum(v: &[u32], mut mask: u64) -> u64 {
    let mut sum = 0u64;
    while mask != 0 {
        let r = mask.trailing_zeros() as usize;
        if let Some(&c) = v.get(r) {
            sum += c as u64;
        }
        mask &= mask - 1;
    }
    sum
}

/// Evaluates `f` on any model whose region cardinalities are `v`.
pub fn satisfies_region(v: &RegionVector, f: &Formula, sig: &Signature) -> Result<bool> {
    if v.counts.len() != sig.region_count() {
        return Err(Error::InvalidFormula("region vector does not match signature".into()));
    }
    Ok(Compiled::new(f, sig)?.eval(&v.counts))
}

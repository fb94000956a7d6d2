//! Truth conditions of the eleven quantifier categories.
//!
//! Every category is a relation between a restrictor set `A` and a scope set
//! `B`, and every one of them depends only on two numbers: `|A \ B|` and
//! `|A ∩ B|`. [`Quantifier::holds`] evaluates a category on that pair;
//! [`eval_model`] computes the pair from a [`FiniteModel`] first.
//!
//! Proportional categories (`fraction`, `percent`) compare by integer
//! cross-multiplication, so "two thirds of seven" is simply false.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantifierKind {
    Some,
    All,
    MoreThan,
    LessThan,
    Exactly,
    Between,
    Fraction,
    Percent,
    Most,
    Few,
    EachOther,
}

impl QuantifierKind {
    pub const ALL: [QuantifierKind; 11] = [
        QuantifierKind::Some,
        QuantifierKind::All,
        QuantifierKind::MoreThan,
        QuantifierKind::LessThan,
        QuantifierKind::Exactly,
        QuantifierKind::Between,
        QuantifierKind::Fraction,
        QuantifierKind::Percent,
        QuantifierKind::Most,
        QuantifierKind::Few,
        QuantifierKind::EachOther,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuantifierKind::Some => "some",
            QuantifierKind::All => "all",
            QuantifierKind::MoreThan => "more_than",
            QuantifierKind::LessThan => "less_than",
            QuantifierKind::Exactly => "exactly",
            QuantifierKind::Between => "between",
            QuantifierKind::Fraction => "fraction",
            QuantifierKind::Percent => "percent",
            QuantifierKind::Most => "most",
            QuantifierKind::Few => "few",
            QuantifierKind::EachOther => "each_other",
        }
    }

    /// Counting quantifiers whose detections compete for the same numeral.
    pub fn is_counting(self) -> bool {
        matches!(
            self,
            QuantifierKind::MoreThan
                | QuantifierKind::LessThan
                | QuantifierKind::Exactly
                | QuantifierKind::Between
                | QuantifierKind::Fraction
                | QuantifierKind::Percent
        )
    }
}

impl fmt::Display for QuantifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        QuantifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown quantifier kind `{s}`"))
    }
}

/// Comparison used by the proportional categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    #[default]
    Eq,
    Gt,
    Lt,
}

/// A quantifier category together with its numeric parameters.
///
/// `k` is the count for the counting categories, the upper bound of
/// `between`, the denominator of `fraction` and the percentage of `percent`.
/// `p` is the lower bound of `between` and the numerator of `fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawQuantifier", into = "RawQuantifier")]
pub struct Quantifier {
    kind: QuantifierKind,
    k: Option<u64>,
    p: Option<u64>,
    comparator: Comparator,
}

#[derive(Serialize, Deserialize)]
struct RawQuantifier {
    kind: QuantifierKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<u64>,
    #[serde(default, skip_serializing_if = "is_eq")]
    cmp: Comparator,
}

fn is_eq(c: &Comparator) -> bool {
    *c == Comparator::Eq
}

impl TryFrom<RawQuantifier> for Quantifier {
    type Error = Error;

    fn try_from(raw: RawQuantifier) -> Result<Self> {
        Quantifier::new(raw.kind, raw.k, raw.p, raw.cmp)
    }
}

impl From<Quantifier> for RawQuantifier {
    fn from(q: Quantifier) -> Self {
        RawQuantifier { kind: q.kind, k: q.k, p: q.p, cmp: q.comparator }
    }
}

/// Cardinalities of `A \ B` and `A ∩ B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CardinalityPair {
    pub a_only: u64,
    pub a_and_b: u64,
}

impl CardinalityPair {
    pub fn new(a_only: u64, a_and_b: u64) -> Self {
        CardinalityPair { a_only, a_and_b }
    }

    pub fn restrictor(&self) -> u64 {
        self.a_only + self.a_and_b
    }
}

impl Quantifier {
    pub fn new(
        kind: QuantifierKind,
        k: Option<u64>,
        p: Option<u64>,
        comparator: Comparator,
    ) -> Result<Self> {
        use QuantifierKind::*;
        let invalid = |reason: &str| Error::InvalidQuantifier { kind, reason: reason.to_string() };
        if comparator != Comparator::Eq && !matches!(kind, Fraction | Percent) {
            return Err(invalid("comparator applies to fraction and percent only"));
        }
        match kind {
            Some | All | Most | Few | EachOther => {
                if k.is_some() || p.is_some() {
                    return Err(invalid("takes no numeric parameters"));
                }
            }
            MoreThan | LessThan | Exactly => {
                if k.is_none() {
                    return Err(invalid("requires k"));
                }
                if p.is_some() {
                    return Err(invalid("does not take p"));
                }
            }
            Between => match (p, k) {
                (Option::Some(p), Option::Some(k)) if p < k => {}
                (Option::Some(_), Option::Some(_)) => return Err(invalid("requires p < k")),
                _ => return Err(invalid("requires both p and k")),
            },
            Fraction => match (p, k) {
                (Option::Some(_), Option::Some(k)) if k >= 1 => {}
                (Option::Some(_), Option::Some(_)) => return Err(invalid("requires k >= 1")),
                _ => return Err(invalid("requires both p and k")),
            },
            Percent => {
                if p.is_some() {
                    return Err(invalid("does not take p"));
                }
                match k {
                    Option::Some(k) if k <= 100 => {}
                    Option::Some(_) => return Err(invalid("requires 0 <= k <= 100")),
                    None => return Err(invalid("requires k")),
                }
            }
        }
        Ok(Quantifier { kind, k, p, comparator })
    }

    fn bare(kind: QuantifierKind) -> Self {
        Quantifier { kind, k: None, p: None, comparator: Comparator::Eq }
    }

    pub fn some() -> Self {
        Self::bare(QuantifierKind::Some)
    }

    pub fn all() -> Self {
        Self::bare(QuantifierKind::All)
    }

    pub fn most() -> Self {
        Self::bare(QuantifierKind::Most)
    }

    pub fn few() -> Self {
        Self::bare(QuantifierKind::Few)
    }

    pub fn each_other() -> Self {
        Self::bare(QuantifierKind::EachOther)
    }

    pub fn more_than(k: u64) -> Self {
        Quantifier { k: Some(k), ..Self::bare(QuantifierKind::MoreThan) }
    }

    pub fn less_than(k: u64) -> Self {
        Quantifier { k: Some(k), ..Self::bare(QuantifierKind::LessThan) }
    }

    pub fn exactly(k: u64) -> Self {
        Quantifier { k: Some(k), ..Self::bare(QuantifierKind::Exactly) }
    }

    pub fn between(p: u64, k: u64) -> Result<Self> {
        Self::new(QuantifierKind::Between, Some(k), Some(p), Comparator::Eq)
    }

    pub fn fraction(p: u64, k: u64, comparator: Comparator) -> Result<Self> {
        Self::new(QuantifierKind::Fraction, Some(k), Some(p), comparator)
    }

    pub fn percent(k: u64, comparator: Comparator) -> Result<Self> {
        Self::new(QuantifierKind::Percent, Some(k), None, comparator)
    }

    pub fn kind(&self) -> QuantifierKind {
        self.kind
    }

    pub fn k(&self) -> Option<u64> {
        self.k
    }

    pub fn p(&self) -> Option<u64> {
        self.p
    }

    pub fn comparator(&self) -> Comparator {
        self.comparator
    }

    /// Evaluates the category on the cardinalities of `A \ B` and `A ∩ B`.
    pub fn holds(&self, c: CardinalityPair) -> bool {
        use QuantifierKind::*;
        let inter = c.a_and_b;
        let k = self.k.unwrap_or(0);
        match self.kind {
            Some => inter > 0,
            All => c.a_only == 0,
            MoreThan => inter > k,
            LessThan => inter < k,
            Exactly => inter == k,
            Between => self.p.unwrap_or(0) < inter && inter < k,
            // k·|A∩B| against p·|A|
            Fraction => compare(
                k as u128 * inter as u128,
                self.p.unwrap_or(0) as u128 * c.restrictor() as u128,
                self.comparator,
            ),
            // 100·|A∩B| against k·|A|
            Percent => {
                compare(100 * inter as u128, k as u128 * c.restrictor() as u128, self.comparator)
            }
            Most => inter > c.a_only,
            Few => inter < c.a_only,
            // every member of A∩B has a distinct partner in A∩B
            EachOther => inter != 1,
        }
    }
}

fn compare(lhs: u128, rhs: u128, cmp: Comparator) -> bool {
    match cmp {
        Comparator::Eq => lhs == rhs,
        Comparator::Gt => lhs > rhs,
        Comparator::Lt => lhs < rhs,
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match (self.p, self.k) {
            (Some(p), Some(k)) => write!(f, "({p},{k})")?,
            (None, Some(k)) => write!(f, "({k})")?,
            _ => {}
        }
        match self.comparator {
            Comparator::Eq => Ok(()),
            Comparator::Gt => f.write_str("[gt]"),
            Comparator::Lt => f.write_str("[lt]"),
        }
    }
}

/// A universe `{0, …, universe_size − 1}` with named subsets.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FiniteModel {
    universe_size: u32,
    sets: BTreeMap<String, BTreeSet<u32>>,
}

impl FiniteModel {
    pub fn new(universe_size: u32) -> Self {
        FiniteModel { universe_size, sets: BTreeMap::new() }
    }

    /// Builds a model from `(name, elements)` pairs, validating every element.
    pub fn with_sets<N, I>(universe_size: u32, sets: I) -> Result<Self>
    where
        N: Into<String>,
        I: IntoIterator<Item = (N, Vec<u32>)>,
    {
        let mut m = FiniteModel::new(universe_size);
        for (name, elems) in sets {
            m.insert_set(name, elems)?;
        }
        Ok(m)
    }

    pub fn insert_set(
        &mut self,
        name: impl Into<String>,
        elems: impl IntoIterator<Item = u32>,
    ) -> Result<()> {
        let name = name.into();
        if self.sets.contains_key(&name) {
            return Err(Error::DuplicateSet(name));
        }
        let set: BTreeSet<u32> = elems.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&e| e >= self.universe_size) {
            return Err(Error::ElementOutOfUniverse {
                name,
                element: bad,
                universe_size: self.universe_size,
            });
        }
        self.sets.insert(name, set);
        Ok(())
    }

    pub fn universe_size(&self) -> u32 {
        self.universe_size
    }

    pub fn set(&self, name: &str) -> Result<&BTreeSet<u32>> {
        self.sets.get(name).ok_or_else(|| Error::NamedSetMissing(name.to_string()))
    }

    pub fn sets(&self) -> impl Iterator<Item = (&str, &BTreeSet<u32>)> {
        self.sets.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn universe(&self) -> BTreeSet<u32> {
        (0..self.universe_size).collect()
    }

    /// Cardinalities of `restrictor \ scope` and `restrictor ∩ scope`.
    pub fn cardinalities(&self, restrictor: &str, scope: &str) -> Result<CardinalityPair> {
        let a = self.set(restrictor)?;
        let b = self.set(scope)?;
        let a_and_b = a.intersection(b).count() as u64;
        Ok(CardinalityPair { a_only: a.len() as u64 - a_and_b, a_and_b })
    }
}

/// Evaluates `q(restrictor)(scope)` in `m`.
pub fn eval_model(q: &Quantifier, restrictor: &str, scope: &str, m: &FiniteModel) -> Result<bool> {
    Ok(q.holds(m.cardinalities(restrictor, scope)?))
}

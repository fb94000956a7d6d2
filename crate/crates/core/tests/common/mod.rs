//! Shared test helpers: a brute-force labeled-model oracle and proptest
//! strategies for quantifiers, models and formulas.
#![allow(dead_code)]

use gqkit::formula::{CardOp, Formula, SetExpr, Signature};
use gqkit::{satisfies, Comparator, FiniteModel, Label, LabelTask, Quantifier, QuantifierKind};
use proptest::prelude::*;

pub const GOLDEN: &str = include_str!("../../data/gqnli_golden.jsonl");

pub fn golden() -> Vec<(String, LabelTask)> {
    GOLDEN
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let cat = v["category"].as_str().unwrap().to_string();
            (cat, serde_json::from_value(v).unwrap())
        })
        .collect()
}

/// Every model over `sig` with at most `max_universe` elements, built by
/// assigning each element a subset of the named sets.
pub fn all_models(sig: &Signature, max_universe: u32) -> Vec<FiniteModel> {
    let names = sig.set_names();
    let options = 1u64 << names.len();
    let mut out = Vec::new();
    for n in 0..=max_universe {
        let total = options.pow(n);
        for code in 0..total {
            let mut sets: Vec<Vec<u32>> = vec![Vec::new(); names.len()];
            let mut c = code;
            for e in 0..n {
                let mask = c % options;
                c /= options;
                for (i, s) in sets.iter_mut().enumerate() {
                    if mask >> i & 1 == 1 {
                        s.push(e);
                    }
                }
            }
            out.push(FiniteModel::with_sets(n, names.iter().cloned().zip(sets)).unwrap());
        }
    }
    out
}

/// Label by exhaustive model enumeration; `None` when the premise has no model.
pub fn naive_label(p: &Formula, h: &Formula, models: &[FiniteModel]) -> Option<Label> {
    let (mut joint, mut counter) = (false, false);
    for m in models {
        if satisfies(m, p).unwrap() {
            if satisfies(m, h).unwrap() {
                joint = true;
            } else {
                counter = true;
            }
        }
    }
    match (joint, counter) {
        (false, false) => None,
        (true, false) => Some(Label::Entailment),
        (false, true) => Some(Label::Contradiction),
        (true, true) => Some(Label::Neutral),
    }
}

pub fn quantifier() -> impl Strategy<Value = Quantifier> {
    let cmp = prop_oneof![Just(Comparator::Eq), Just(Comparator::Gt), Just(Comparator::Lt)];
    prop_oneof![
        Just(Quantifier::some()),
        Just(Quantifier::all()),
        Just(Quantifier::most()),
        Just(Quantifier::few()),
        Just(Quantifier::each_other()),
        (0u64..6).prop_map(Quantifier::more_than),
        (0u64..6).prop_map(Quantifier::less_than),
        (0u64..6).prop_map(Quantifier::exactly),
        (0u64..4, 1u64..4).prop_map(|(p, d)| Quantifier::between(p, p + d).unwrap()),
        (0u64..5, 1u64..6, cmp.clone()).prop_map(|(p, k, c)| Quantifier::fraction(p, k, c).unwrap()),
        (0u64..=100, cmp).prop_map(|(k, c)| Quantifier::percent(k, c).unwrap()),
    ]
}

pub fn kinds(kinds: &'static [QuantifierKind]) -> impl Strategy<Value = Quantifier> {
    quantifier().prop_filter("kind", move |q| kinds.contains(&q.kind()))
}

/// Membership vectors for sets `a` and `b` over a universe of up to 12 elements.
pub fn membership() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (0usize..=12).prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)))
}

pub fn elems(m: &[bool]) -> Vec<u32> {
    m.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i as u32).collect()
}

pub fn model(a: &[bool], b: &[bool]) -> FiniteModel {
    FiniteModel::with_sets(a.len() as u32, [("a", elems(a)), ("b", elems(b))]).unwrap()
}

const NAMES: [&str; 3] = ["a", "b", "c"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(str::to_string)
}

fn set_expr() -> impl Strategy<Value = SetExpr> {
    let leaf = name().prop_map(SetExpr::Name);
    leaf.prop_recursive(1, 4, 2, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2).prop_map(SetExpr::Intersect),
            prop::collection::vec(inner.clone(), 2).prop_map(SetExpr::Union),
            prop::collection::vec(inner, 2).prop_map(SetExpr::Diff),
        ]
    })
}

fn atom() -> impl Strategy<Value = Formula> {
    let op = prop_oneof![Just(CardOp::Eq), Just(CardOp::Le), Just(CardOp::Ge)];
    prop_oneof![
        4 => (quantifier(), name(), name()).prop_map(|(q, r, s)| Formula::quant(q, r, s)),
        2 => (set_expr(), op, 0u64..4).prop_map(|(e, o, v)| Formula::card(e, o, v)),
        1 => (name(), name()).prop_map(|(x, y)| Formula::subset(x, y)),
        1 => (name(), name()).prop_map(|(x, y)| Formula::disjoint(x, y)),
    ]
}

/// Random formulas over the sets `a`, `b`, `c`.
pub fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 1..=3).prop_map(Formula::And),
            prop::collection::vec(inner, 1..=2).prop_map(Formula::Or),
        ]
    })
}

pub fn abc(bound: u32) -> Signature {
    Signature::new(NAMES, bound).unwrap()
}

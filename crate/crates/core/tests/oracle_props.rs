mod common;

use common::{abc, all_models, formula, golden, naive_label};
use gqkit::{Error, Formula, Label, Oracle};
use proptest::prelude::*;

fn label(p: &Formula, h: &Formula, bound: u32) -> Option<Label> {
    match Oracle::default().label(p, h, &abc(bound)) {
        Ok(l) => Some(l.label),
        Err(Error::UnsatisfiablePremise { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn golden_suite_matches_brute_force() {
    let mut compared = 0;
    for (cat, t) in golden() {
        if t.signature.set_names().len() > 3 {
            continue;
        }
        for bound in 1..=4 {
            let sig = t.signature.with_bound(bound).unwrap();
            let models = all_models(&sig, sig.universe_bound());
            let expected = naive_label(&t.premise_formula, &t.hypothesis_formula, &models);
            let got = match Oracle::default().label(&t.premise_formula, &t.hypothesis_formula, &sig) {
                Ok(l) => Some(l.label),
                Err(Error::UnsatisfiablePremise { .. }) => None,
                Err(e) => panic!("{cat}: {e}"),
            };
            assert_eq!(got, expected, "{cat} at bound {}", sig.universe_bound());
            compared += 1;
        }
    }
    assert_eq!(compared, 40);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_formulas_match_brute_force(p in formula(), h in formula()) {
        let sig = abc(3);
        let models = all_models(&sig, 3);
        prop_assert_eq!(label(&p, &h, 3), naive_label(&p, &h, &models));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn reflexivity(p in formula()) {
        if let Some(l) = label(&p, &p, 6) {
            prop_assert_eq!(l, Label::Entailment);
        }
    }

    #[test]
    fn negation_coherence(p in formula(), h in formula()) {
        let pos = label(&p, &h, 5);
        let neg = label(&p, &Formula::not(h), 5);
        prop_assert_eq!(pos == Some(Label::Contradiction), neg == Some(Label::Entailment));
        prop_assert_eq!(pos == Some(Label::Entailment), neg == Some(Label::Contradiction));
    }

    #[test]
    fn contradiction_symmetry(p in formula(), h in formula()) {
        if label(&p, &h, 5) == Some(Label::Contradiction) {
            if let Some(back) = label(&h, &p, 5) {
                prop_assert_eq!(back, Label::Contradiction);
            }
        }
    }

    #[test]
    fn neutral_persists_at_larger_bounds(p in formula(), h in formula(), extra in 1u32..4) {
        if label(&p, &h, 4) == Some(Label::Neutral) {
            prop_assert_eq!(label(&p, &h, 4 + extra), Some(Label::Neutral));
        }
    }
}

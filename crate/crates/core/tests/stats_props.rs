use std::collections::BTreeMap;

use gqkit::agreement::fleiss_kappa;
use gqkit::corpus::CorpusEntry;
use gqkit::detect::DetectionMatch;
use gqkit::stats::{count_categories, pairwise_matrix, stratified_accuracy, zipf_table, AnnotatedEntry, Slot};
use gqkit::{Label, QuantifierKind};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = QuantifierKind> {
    prop::sample::select(QuantifierKind::ALL.to_vec())
}

fn label() -> impl Strategy<Value = Label> {
    prop::sample::select(Label::ALL.to_vec())
}

fn dets(kinds: Vec<QuantifierKind>) -> Vec<DetectionMatch> {
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| DetectionMatch {
            kind,
            char_span: (i, i + 1),
            token_span: (1, 1),
            raw_numeral: None,
            parsed_k: None,
            parsed_p: None,
        })
        .collect()
}

fn entry() -> impl Strategy<Value = AnnotatedEntry> {
    (
        prop::collection::vec(kind(), 0..3),
        prop::collection::vec(kind(), 0..3),
        label(),
        label(),
    )
        .prop_map(|(p, h, gold, pred)| {
            let mut detections = BTreeMap::new();
            detections.insert("premise".to_string(), dets(p));
            detections.insert("hypothesis".to_string(), dets(h));
            AnnotatedEntry {
                entry: CorpusEntry {
                    gold_label: Some(gold),
                    predicted_label: Some(pred),
                    ..CorpusEntry::default()
                },
                detections,
            }
        })
}

fn corpus() -> impl Strategy<Value = Vec<AnnotatedEntry>> {
    prop::collection::vec(entry(), 0..40)
}

proptest! {
    #[test]
    fn counts_are_additive(a in corpus(), b in corpus()) {
        let joined: Vec<_> = a.iter().chain(&b).cloned().collect();
        let whole = count_categories(&joined, "hypothesis").unwrap();
        let parts = count_categories(&a, "hypothesis").unwrap().merge(&count_categories(&b, "hypothesis").unwrap());
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn zipf_is_ranked(counts in prop::collection::vec(0u64..50, 1..11)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let rows = zipf_table(counts.iter().copied().enumerate()).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[0].relative >= w[1].relative);
        }
        let sum: f64 = rows.iter().map(|r| r.relative).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!((rows.last().unwrap().cumulative - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn accuracies_are_proportions(c in corpus()) {
        let (r, _) = stratified_accuracy(&[&c], "hypothesis").unwrap();
        prop_assert_eq!(r.weighted, r.full.accuracy());
        for stat in r.per_category.values().chain([&r.all_gqs, &r.full]) {
            prop_assert!((0.0..=1.0).contains(&stat.accuracy()));
        }
        let f = count_categories(&c, "hypothesis").unwrap().frequency();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn pairwise_marginals_reconcile(c in corpus()) {
        let (m, _) = pairwise_matrix(&c, "premise", "hypothesis").unwrap();
        let (r, _) = stratified_accuracy(&[&c], "hypothesis").unwrap();
        for k in QuantifierKind::ALL {
            let col: u64 = m.cells.iter().filter(|x| x.hypothesis == Slot::Kind(k)).map(|x| x.n).sum();
            let correct: f64 = m.cells.iter().filter(|x| x.hypothesis == Slot::Kind(k)).map(|x| x.accuracy * x.n as f64).sum();
            let stat = r.per_category.get(&k).copied().unwrap_or_default();
            prop_assert_eq!(col, stat.n);
            prop_assert!((correct - stat.correct as f64).abs() < 1e-9);
        }
        let unmatched: u64 = m.cells.iter().filter(|x| x.hypothesis == Slot::Unmatched).map(|x| x.n).sum();
        prop_assert_eq!(unmatched, r.full.n - r.all_gqs.n);
    }

    #[test]
    fn kappa_is_one_only_for_unanimous_rows(rows in prop::collection::vec((0usize..3, any::<bool>()), 2..10)) {
        // each item: three raters, either unanimous on a category or split 2/1
        let matrix: Vec<Vec<u64>> = rows
            .iter()
            .map(|&(cat, unanimous)| {
                let mut r = vec![0u64; 3];
                if unanimous { r[cat] = 3 } else { r[cat] = 2; r[(cat + 1) % 3] = 1 }
                r
            })
            .collect();
        let all_unanimous = rows.iter().all(|r| r.1);
        match fleiss_kappa(&matrix) {
            Ok(k) => prop_assert_eq!(k == 1.0, all_unanimous),
            // chance agreement of 1 only arises when every rating is one category
            Err(_) => prop_assert!(!all_unanimous),
        }
    }
}

#[test]
fn kappa_mixed_fixture() {
    let src = include_str!("fixtures/kappa_mixed.csv");
    let rows: Vec<Vec<u64>> =
        src.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    // hand computation: P-bar = 5/12, P-e = 7/18, kappa = (1/36) / (11/18) = 1/22
    assert!((fleiss_kappa(&rows).unwrap() - 1.0 / 22.0).abs() < 1e-9);
}

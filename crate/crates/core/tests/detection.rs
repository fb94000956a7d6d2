use std::collections::BTreeSet;

use gqkit::conllu::{parse_conllu_str, serialize};
use gqkit::detect::{default_patterns, detect};
use gqkit::QuantifierKind;

const CATEGORIES: &str = include_str!("../data/fixtures/categories.conllu");
const EXAMPLE: &str = include_str!("../data/fixtures/example.conllu");

/// Categories whose fixture sentence yields the category itself.
fn covered() -> BTreeSet<String> {
    let ps = default_patterns();
    parse_conllu_str(CATEGORIES)
        .unwrap()
        .iter()
        .filter(|s| {
            let want: QuantifierKind = s.uid.parse().unwrap();
            detect(s, &ps).iter().any(|m| m.kind == want)
        })
        .map(|s| s.uid.clone())
        .collect()
}

#[test]
fn category_sentences() {
    let sentences = parse_conllu_str(CATEGORIES).unwrap();
    assert_eq!(sentences.len(), 11);
    // the three misses are explained by the `# note` comments in the fixture
    let missed: BTreeSet<String> = ["exactly", "more_than", "most"].map(String::from).into();
    let expected: BTreeSet<String> =
        sentences.iter().map(|s| s.uid.clone()).filter(|u| !missed.contains(u)).collect();
    assert_eq!(covered(), expected);
}

#[test]
fn example_sentence() {
    let s = &parse_conllu_str(EXAMPLE).unwrap()[0];
    let found = detect(s, &default_patterns());
    assert_eq!(found.len(), 1);
    let m = &found[0];
    assert_eq!(m.kind, QuantifierKind::MoreThan);
    assert_eq!(m.parsed_k, Some(1000));
    assert_eq!(m.raw_numeral.as_deref(), Some("thousand"));
}

#[test]
fn spans_are_pattern_matches() {
    let ps = default_patterns();
    for s in parse_conllu_str(CATEGORIES).unwrap() {
        let text = serialize(&s).text;
        for m in detect(&s, &ps) {
            let piece = &text[m.char_span.0..m.char_span.1];
            let re = &ps.entries().iter().find(|e| e.kind == m.kind).unwrap().regex();
            assert!(re.find(piece).is_some_and(|x| x.as_str() == piece), "{}: {piece}", s.uid);
        }
    }
}

#[test]
fn counting_matches_do_not_overlap() {
    let ps = default_patterns();
    for s in parse_conllu_str(CATEGORIES).unwrap().iter().chain(&parse_conllu_str(EXAMPLE).unwrap()) {
        let counting: Vec<_> = detect(s, &ps).into_iter().filter(|m| m.kind.is_counting()).collect();
        for (i, a) in counting.iter().enumerate() {
            for b in &counting[i + 1..] {
                assert!(a.char_span.1 <= b.char_span.0 || b.char_span.1 <= a.char_span.0, "{}", s.uid);
            }
        }
    }
}

//! Regex-based quantifier detection over serialized dependency annotations.
//!
//! Patterns run against the `lemma/deprel` string produced by
//! [`crate::conllu::serialize`]. Matches are mapped back to tokens through
//! the serialization's byte spans, and numerals are read off the matched
//! tokens.
//!
//! Within the counting family (`between`, `fraction`, `percent`,
//! `more_than`, `less_than`, `exactly`) a numeral should be claimed once:
//! kinds are tried in priority order and a match overlapping an already
//! accepted counting match is dropped. Other kinds are reported wherever
//! they match.

use std::collections::HashSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::conllu::{serialize, Sentence, Serialized, Token};
use crate::error::{Error, Result};
use crate::numeral::{fraction_word, parse_numeral};
use crate::semantics::QuantifierKind;

pub const DEFAULT_PATTERNS: &str = include_str!("../data/patterns.tsv");

pub const DEFAULT_PRIORITY: [QuantifierKind; 6] = [
    QuantifierKind::Between,
    QuantifierKind::Fraction,
    QuantifierKind::Percent,
    QuantifierKind::MoreThan,
    QuantifierKind::LessThan,
    QuantifierKind::Exactly,
];

#[derive(Debug, Clone)]
pub struct PatternEntry {
    pub kind: QuantifierKind,
    pub source: String,
    regex: Regex,
}

#[derive(Debug, Clone)]
pub struct PatternSet {
    entries: Vec<PatternEntry>,
    priority: Vec<QuantifierKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionMatch {
    pub kind: QuantifierKind,
    /// Byte range into the serialized sentence.
    pub char_span: (usize, usize),
    /// First and last token index (1-based, inclusive).
    pub token_span: (u32, u32),
    pub raw_numeral: Option<String>,
    pub parsed_k: Option<u64>,
    pub parsed_p: Option<u64>,
}

/// Parses and compiles a pattern file.
///
/// Each record is `<kind>\t<regex>`; `#` starts a comment line. A record
/// `priority\t<kind>,<kind>,…` overrides the counting-family priority.
pub fn compile_patterns(source: &str) -> Result<PatternSet> {
    let mut entries: Vec<PatternEntry> = Vec::new();
    let mut priority = DEFAULT_PRIORITY.to_vec();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let record = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (kind, pattern) = line.split_once('\t').ok_or_else(|| {
            Error::PatternFile(format!("line {record}: expected <kind><TAB><pattern>"))
        })?;
        let kind = kind.trim();
        if kind == "priority" {
            priority = pattern
                .split(',')
                .map(|k| k.trim().parse::<QuantifierKind>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::PatternFile(format!("line {record}: {e}")))?;
            continue;
        }
        let kind: QuantifierKind =
            kind.parse().map_err(|e| Error::PatternFile(format!("line {record}: {e}")))?;
        if !seen.insert((kind, pattern.to_string())) {
            return Err(Error::PatternFile(format!(
                "line {record}: duplicate pattern for {kind}"
            )));
        }
        let regex = Regex::new(pattern).map_err(|e| Error::PatternCompile {
            kind: kind.to_string(),
            record,
            message: e.to_string(),
        })?;
        entries.push(PatternEntry { kind, source: pattern.to_string(), regex });
    }
    let missing: Vec<&str> = QuantifierKind::ALL
        .iter()
        .filter(|k| !entries.iter().any(|e| e.kind == **k))
        .map(|k| k.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::PatternFile(format!("no pattern for {}", missing.join(", "))));
    }
    Ok(PatternSet { entries, priority })
}

impl PatternEntry {
    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

impl PatternSet {
    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn priority(&self) -> &[QuantifierKind] {
        &self.priority
    }

    fn of_kind(&self, kind: QuantifierKind) -> impl Iterator<Item = &PatternEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }
}

pub fn default_patterns() -> PatternSet {
    compile_patterns(DEFAULT_PATTERNS).expect("bundled patterns compile")
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Every quantifier occurrence in `s`, ordered by position.
pub fn detect(s: &Sentence, ps: &PatternSet) -> Vec<DetectionMatch> {
    let ser = serialize(s);
    let mut spans: Vec<(QuantifierKind, (usize, usize))> = Vec::new();

    let counting: Vec<QuantifierKind> = ps
        .priority
        .iter()
        .copied()
        .chain(QuantifierKind::ALL.into_iter().filter(|k| k.is_counting()))
        .filter(|k| k.is_counting())
        .fold(Vec::new(), |mut acc, k| {
            if !acc.contains(&k) {
                acc.push(k);
            }
            acc
        });
    let mut claimed: Vec<(usize, usize)> = Vec::new();
    for kind in counting {
        for entry in ps.of_kind(kind) {
            let mut pos = 0;
            while let Some(m) = entry.regex.find_at(&ser.text, pos) {
                let span = (m.start(), m.end());
                if !m.is_empty() && claimed.iter().all(|&c| !overlaps(c, span)) {
                    claimed.push(span);
                    spans.push((kind, span));
                    pos = m.end();
                    continue;
                }
                // a greedy match swallowed a claimed span: look for a shorter
                // match in the free gap before it, else retry from the next token
                let free_start = claimed.iter().all(|&c| !(c.0 <= m.start() && m.start() < c.1));
                let limit = claimed.iter().map(|c| c.0).filter(|&c| c > m.start()).min();
                if let (true, Some(limit)) = (free_start, limit) {
                    if let Some(g) = entry.regex.find_at(&ser.text[..limit], m.start()).filter(|g| !g.is_empty()) {
                        claimed.push((g.start(), g.end()));
                        spans.push((kind, (g.start(), g.end())));
                        pos = g.end();
                        continue;
                    }
                }
                match ser.spans.iter().map(|s| s.0).find(|&s| s > m.start()) {
                    Some(next) => pos = next,
                    None => break,
                }
            }
        }
    }
    for kind in QuantifierKind::ALL.into_iter().filter(|k| !k.is_counting()) {
        for entry in ps.of_kind(kind) {
            for m in entry.regex.find_iter(&ser.text).filter(|m| !m.is_empty()) {
                let span = (m.start(), m.end());
                if !spans.contains(&(kind, span)) {
                    spans.push((kind, span));
                }
            }
        }
    }
    spans.sort_by_key(|&(kind, span)| (span.0, kind, span.1));
    spans.into_iter().filter_map(|(kind, span)| build_match(s, &ser, kind, span)).collect()
}

fn build_match(
    s: &Sentence,
    ser: &Serialized,
    kind: QuantifierKind,
    span: (usize, usize),
) -> Option<DetectionMatch> {
    let (first, last) = ser.tokens_in(span.0, span.1)?;
    let raw = extract_numeral(kind, &s.tokens, first, last);
    let parsed = raw.as_deref().and_then(|r| parse_for_kind(kind, r));
    Some(DetectionMatch {
        kind,
        char_span: span,
        token_span: (s.tokens[first].index, s.tokens[last].index),
        raw_numeral: raw,
        parsed_k: parsed.map(|(_, k)| k),
        parsed_p: parsed.and_then(|(p, _)| p),
    })
}

fn lemma(t: &Token) -> String {
    t.lemma.to_lowercase()
}

fn is_number(t: &Token) -> bool {
    let l = lemma(t);
    l != "a" && l != "an" && parse_numeral(&l).is_some_and(|n| n.p.is_none())
}

/// The run of number tokens ending at `end`, e.g. `ten thousand`.
fn numeral_run(tokens: &[Token], end: usize) -> String {
    let mut start = end;
    while start > 0 {
        let prev = &tokens[start - 1];
        let joins = matches!(prev.deprel.as_str(), "compound" | "nummod" | "flat");
        if !(joins && is_number(prev)) {
            break;
        }
        start -= 1;
    }
    tokens[start..=end].iter().map(lemma).collect::<Vec<_>>().join(" ")
}

/// Reads the numeral of a match covering `all[first..=last]`. Number runs
/// may extend left of the match (`two` in `two/nummod third/nsubj`).
fn extract_numeral(kind: QuantifierKind, all: &[Token], first: usize, last: usize) -> Option<String> {
    let tokens = &all[first..=last];
    use QuantifierKind::{All, Between, EachOther, Exactly, Few, Fraction, LessThan, MoreThan, Most, Percent};
    match kind {
        MoreThan | LessThan | Exactly => {
            let at = tokens.iter().position(|t| t.deprel.starts_with("nummod"))?;
            Some(numeral_run(all, first + at))
        }
        Between => {
            let after = tokens.iter().position(|t| lemma(t) == "between").map_or(0, |i| i + 1);
            let nums: Vec<String> =
                tokens[after..].iter().filter(|t| is_number(t)).map(lemma).collect();
            match nums.as_slice() {
                [] => None,
                [one] => Some(one.clone()),
                [p, .., k] => Some(format!("{p} and {k}")),
            }
        }
        Fraction => {
            let at = tokens.iter().position(|t| {
                let l = lemma(t);
                fraction_word(&l).is_some() || parse_numeral(&l).is_some_and(|n| n.p.is_some())
            })?;
            Some(numeral_run(all, first + at))
        }
        Percent => {
            let at = tokens.iter().position(|t| t.deprel.starts_with("nummod"))?;
            Some(format!("{}%", lemma(&tokens[at])))
        }
        QuantifierKind::Some | All | Most | Few | EachOther => None,
    }
}

fn parse_for_kind(kind: QuantifierKind, raw: &str) -> Option<(Option<u64>, u64)> {
    if kind == QuantifierKind::Between {
        let (p, k) = raw.split_once(" and ")?;
        return Some((Some(parse_numeral(p)?.k), parse_numeral(k)?.k));
    }
    let n = parse_numeral(raw)?;
    Some((n.p, n.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu_str;

    fn sentence(rows: &[(&str, &str, &str)]) -> Sentence {
        // (lemma, upos, deprel); heads are irrelevant to matching
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, &(lemma, upos, deprel))| Token {
                index: i as u32 + 1,
                surface: lemma.to_string(),
                lemma: lemma.to_string(),
                upos: upos.to_string(),
                deprel: deprel.to_string(),
                head: 0,
            })
            .collect();
        Sentence { tokens, ..Sentence::default() }
    }

    #[test]
    fn default_file_covers_every_kind() {
        let ps = default_patterns();
        for k in QuantifierKind::ALL {
            assert!(ps.of_kind(k).count() >= 1, "{k}");
        }
        assert_eq!(ps.priority(), DEFAULT_PRIORITY);
    }

    #[test]
    fn pattern_file_errors() {
        let without_few: String =
            DEFAULT_PATTERNS.lines().filter(|l| !l.starts_with("few\t")).collect::<Vec<_>>().join("\n");
        let err = compile_patterns(&without_few).unwrap_err();
        assert!(err.to_string().contains("few"), "{err}");

        let broken = format!("{DEFAULT_PATTERNS}\nmost\t([\n");
        assert!(matches!(
            compile_patterns(&broken),
            Err(Error::PatternCompile { ref kind, .. }) if kind == "most"
        ));

        let dup = format!("{DEFAULT_PATTERNS}\neach_other\teach\\/det other\\/(nsubj|obj|obl)\n");
        assert!(matches!(compile_patterns(&dup), Err(Error::PatternFile(_))));
        assert!(compile_patterns("bogus\tx").is_err());
        assert!(compile_patterns("some x").is_err());
    }

    #[test]
    fn more_than_a_thousand() {
        let s = sentence(&[
            ("the", "DET", "det"),
            ("Yiddish", "ADJ", "amod"),
            ("culture", "NOUN", "nsubj"),
            ("have", "AUX", "aux"),
            ("survive", "VERB", "root"),
            ("for", "ADP", "case"),
            ("more", "ADJ", "advmod"),
            ("than", "ADP", "fixed"),
            ("a", "DET", "det"),
            ("thousand", "NUM", "nummod"),
            ("year", "NOUN", "obl"),
            (".", "PUNCT", "punct"),
        ]);
        let found = detect(&s, &default_patterns());
        assert_eq!(found.len(), 1, "{found:?}");
        let m = &found[0];
        assert_eq!(m.kind, QuantifierKind::MoreThan);
        assert_eq!(m.raw_numeral.as_deref(), Some("thousand"));
        assert_eq!(m.parsed_k, Some(1000));
        assert_eq!(m.token_span, (7, 11));
    }

    #[test]
    fn everyone_is_universal() {
        let s = sentence(&[
            ("everyone", "PRON", "nsubj"),
            ("agree", "VERB", "root"),
            ("the", "DET", "det"),
            ("food", "NOUN", "nsubj"),
            ("be", "AUX", "cop"),
            ("terrible", "ADJ", "ccomp"),
            (".", "PUNCT", "punct"),
        ]);
        let kinds: Vec<_> = detect(&s, &default_patterns()).into_iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![QuantifierKind::All]);
    }

    #[test]
    fn no_quantifier() {
        let s = sentence(&[("dog", "NOUN", "nsubj"), ("run", "VERB", "root")]);
        assert!(detect(&s, &default_patterns()).is_empty());
        assert!(detect(&Sentence::default(), &default_patterns()).is_empty());
    }

    #[test]
    fn counting_priority_and_parameters() {
        let ps = default_patterns();
        let s = sentence(&[
            ("between", "ADP", "case"),
            ("four", "NUM", "nummod"),
            ("and", "CCONJ", "cc"),
            ("five", "NUM", "conj"),
            ("cleaner", "NOUN", "nsubj"),
            ("be", "AUX", "aux"),
            ("sweep", "VERB", "root"),
        ]);
        let found = detect(&s, &ps);
        assert_eq!(found.len(), 1, "{found:?}");
        assert_eq!(found[0].kind, QuantifierKind::Between);
        assert_eq!((found[0].parsed_p, found[0].parsed_k), (Some(4), Some(5)));

        let s = sentence(&[
            ("100", "NUM", "nummod"),
            ("%", "SYM", "nsubj"),
            ("of", "ADP", "case"),
            ("the", "DET", "det"),
            ("guy", "NOUN", "nmod"),
            ("chase", "VERB", "root"),
            ("two", "NUM", "nummod"),
            ("girl", "NOUN", "obj"),
        ]);
        let found = detect(&s, &ps);
        let kinds: Vec<_> = found.iter().map(|m| m.kind).collect();
        assert_eq!(kinds, vec![QuantifierKind::Percent, QuantifierKind::Exactly]);
        assert_eq!(found[0].parsed_k, Some(100));
        assert_eq!(found[1].parsed_k, Some(2));

        let s = sentence(&[
            ("two", "NUM", "nummod"),
            ("third", "NOUN", "nsubj"),
            ("of", "ADP", "case"),
            ("American", "PROPN", "nmod"),
            ("worry", "VERB", "root"),
        ]);
        let found = detect(&s, &ps);
        assert_eq!(found[0].kind, QuantifierKind::Fraction);
        assert_eq!((found[0].parsed_p, found[0].parsed_k), (Some(2), Some(3)));
    }

    #[test]
    fn spans_reproduce_pattern_matches() {
        let src = "\
1\tMost\tmost\tADJ\t_\t_\t2\tamod\t_\t_
2\tdogs\tdog\tNOUN\t_\t_\t3\tnsubj\t_\t_
3\tchase\tchase\tVERB\t_\t_\t0\troot\t_\t_
4\teach\teach\tDET\t_\t_\t5\tdet\t_\t_
5\tother\tother\tADJ\t_\t_\t3\tobj\t_\t_
";
        let s = &parse_conllu_str(src).unwrap()[0];
        let ps = default_patterns();
        let text = serialize(s).text;
        let found = detect(s, &ps);
        let kinds: Vec<_> = found.iter().map(|m| m.kind).collect();
        assert_eq!(
            kinds,
            vec![QuantifierKind::Most, QuantifierKind::All, QuantifierKind::EachOther]
        );
        for m in &found {
            let piece = &text[m.char_span.0..m.char_span.1];
            assert!(ps.of_kind(m.kind).any(|e| e.regex.find(piece).is_some_and(|x| x.as_str() == piece)));
        }
    }
}

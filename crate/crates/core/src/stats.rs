//! Occurrence tables, rank-frequency curves, stratified accuracy, premise ×
//! hypothesis matrices and negation co-occurrence.
//!
//! Category counts are per entry: an entry whose hypothesis carries three
//! `some` detections counts once for `some`. Per-detection totals are kept
//! alongside in [`CategoryCounts::occurrences`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::SourceField;
use crate::corpus::{CorpusEntry, Reject};
use crate::detect::{detect, DetectionMatch, PatternSet};
use crate::error::{Error, Result};
use crate::semantics::QuantifierKind;

pub const DEFAULT_NEGATION_CUES: &str = include_str!("../data/negation_cues.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedEntry {
    pub entry: CorpusEntry,
    /// Detections per canonical field, for fields that carry an annotation.
    pub detections: BTreeMap<String, Vec<DetectionMatch>>,
}

impl AnnotatedEntry {
    pub fn kinds(&self, field: &str) -> BTreeSet<QuantifierKind> {
        self.detections.get(field).map(|d| d.iter().map(|m| m.kind).collect()).unwrap_or_default()
    }

    fn is_correct(&self) -> Option<bool> {
        Some(self.entry.gold_label? == self.entry.predicted_label?)
    }
}

/// Runs detection on every annotated field of every entry.
pub fn annotate(entries: Vec<CorpusEntry>, ps: &PatternSet) -> Vec<AnnotatedEntry> {
    entries
        .into_par_iter()
        .map(|entry| {
            let detections = entry
                .fields
                .iter()
                .filter_map(|(name, f)| Some((name.clone(), detect(f.sentence.as_ref()?, ps))))
                .collect();
            AnnotatedEntry { entry, detections }
        })
        .collect()
}

fn check_field(field: &str) -> Result<()> {
    field.parse::<SourceField>().map(|_| ()).map_err(|_| Error::UnknownField(field.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    /// Entries carrying at least one detection of the kind.
    pub counts: BTreeMap<QuantifierKind, u64>,
    /// Total detections of the kind.
    pub occurrences: BTreeMap<QuantifierKind, u64>,
    pub total_entries: u64,
    pub entries_with_any: u64,
}

impl Default for CategoryCounts {
    fn default() -> Self {
        let zeros: BTreeMap<_, _> = QuantifierKind::ALL.iter().map(|&k| (k, 0)).collect();
        CategoryCounts { counts: zeros.clone(), occurrences: zeros, total_entries: 0, entries_with_any: 0 }
    }
}

impl CategoryCounts {
    /// Share of entries with any detection; 0 for an empty corpus.
    pub fn frequency(&self) -> f64 {
        if self.total_entries == 0 {
            0.0
        } else {
            self.entries_with_any as f64 / self.total_entries as f64
        }
    }

    pub fn merge(mut self, other: &CategoryCounts) -> Self {
        for (k, v) in &other.counts {
            *self.counts.entry(*k).or_default() += v;
        }
        for (k, v) in &other.occurrences {
            *self.occurrences.entry(*k).or_default() += v;
        }
        self.total_entries += other.total_entries;
        self.entries_with_any += other.entries_with_any;
        self
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tentries\toccurrences\n");
        for k in QuantifierKind::ALL {
            let _ = writeln!(out, "{k}\t{}\t{}", self.counts[&k], self.occurrences[&k]);
        }
        let total: u64 = self.counts.values().sum();
        let occ: u64 = self.occurrences.values().sum();
        let _ = writeln!(out, "total\t{total}\t{occ}");
        let _ = writeln!(out, "entries\t{}\t", self.total_entries);
        let _ = writeln!(out, "entries_with_any\t{}\t", self.entries_with_any);
        let _ = writeln!(out, "frequency\t{:.6}\t", self.frequency());
        out
    }
}

pub fn count_categories(corpus: &[AnnotatedEntry], field: &str) -> Result<CategoryCounts> {
    check_field(field)?;
    let mut c = CategoryCounts::default();
    for e in corpus {
        c.total_entries += 1;
        let Some(found) = e.detections.get(field) else { continue };
        let kinds: BTreeSet<QuantifierKind> = found.iter().map(|m| m.kind).collect();
        if !kinds.is_empty() {
            c.entries_with_any += 1;
        }
        for k in kinds {
            *c.counts.entry(k).or_default() += 1;
        }
        for m in found {
            *c.occurrences.entry(m.kind).or_default() += 1;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfRow<K> {
    pub rank: usize,
    pub category: K,
    pub count: u64,
    pub relative: f64,
    pub cumulative: f64,
}

/// Rank-frequency table: nonzero categories by descending count (ties keep
/// input order), with relative and cumulative frequencies.
pub fn zipf_table<K: Clone>(counts: impl IntoIterator<Item = (K, u64)>) -> Result<Vec<ZipfRow<K>>> {
    let mut rows: Vec<(K, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
    let total: u64 = rows.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return Err(Error::Statistics("no occurrences to rank".into()));
    }
    rows.sort_by(|a, b| b.1.cmp(&a.1));
    let mut running = 0u64;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (category, count))| {
            running += count;
            ZipfRow {
                rank: i + 1,
                category,
                count,
                relative: count as f64 / total as f64,
                cumulative: running as f64 / total as f64,
            }
        })
        .collect())
}

pub fn zipf_tsv(rows: &[ZipfRow<QuantifierKind>]) -> String {
    let mut out = String::from("rank\tcategory\tcount\trelative\tcumulative\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            r.rank, r.category, r.count, r.relative, r.cumulative
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellStat {
    pub n: u64,
    pub correct: u64,
}

impl CellStat {
    fn add(&mut self, correct: bool) {
        self.n += 1;
        self.correct += correct as u64;
    }

    /// Share of correct predictions; 0 for an empty cell.
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub per_category: BTreeMap<QuantifierKind, CellStat>,
    pub all_gqs: CellStat,
    pub full: CellStat,
    /// Total correct over total instances, across every sub-corpus.
    pub weighted: f64,
    /// Unweighted mean of the sub-corpus accuracies.
    pub macro_mean: f64,
    pub subcorpora: Vec<CellStat>,
}

impl StratifiedReport {
    /// `category n accuracy gap` rows; gap is full accuracy minus the row's.
    pub fn to_tsv(&self) -> String {
        let full = self.full.accuracy();
        let mut out = String::from("category\tn\taccuracy\tgap\n");
        let mut row = |name: &str, c: &CellStat| {
            let _ = writeln!(out, "{name}\t{}\t{:.6}\t{:.6}", c.n, c.accuracy(), full - c.accuracy());
        };
        for (k, c) in &self.per_category {
            row(k.as_str(), c);
        }
        row("all_gqs", &self.all_gqs);
        row("full", &self.full);
        let _ = writeln!(out, "weighted\t{}\t{:.6}\t", self.full.n, self.weighted);
        out
    }
}

fn split_labeled<'a>(
    corpus: &'a [AnnotatedEntry],
    rejects: &mut Vec<Reject>,
) -> Vec<(&'a AnnotatedEntry, bool)> {
    corpus
        .iter()
        .filter_map(|e| match e.is_correct() {
            Some(ok) => Some((e, ok)),
            None => {
                rejects.push(Reject {
                    line: 0,
                    uid: Some(e.entry.uid.clone()),
                    reason: "missing gold or predicted label".into(),
                });
                None
            }
        })
        .collect()
}

/// Accuracy by hypothesis-field category over one or more sub-corpora.
/// Entries lacking a gold or predicted label are skipped and reported.
pub fn stratified_accuracy(
    subcorpora: &[&[AnnotatedEntry]],
    field: &str,
) -> Result<(StratifiedReport, Vec<Reject>)> {
    check_field(field)?;
    let mut rejects = Vec::new();
    let mut per_category: BTreeMap<QuantifierKind, CellStat> = BTreeMap::new();
    let mut all_gqs = CellStat::default();
    let mut full = CellStat::default();
    let mut subs = Vec::new();
    for corpus in subcorpora {
        let mut sub = CellStat::default();
        for (e, ok) in split_labeled(corpus, &mut rejects) {
            sub.add(ok);
            full.add(ok);
            let kinds = e.kinds(field);
            if !kinds.is_empty() {
                all_gqs.add(ok);
            }
            for k in kinds {
                per_category.entry(k).or_default().add(ok);
            }
        }
        subs.push(sub);
    }
    let nonempty: Vec<f64> = subs.iter().filter(|s| s.n > 0).map(|s| s.accuracy()).collect();
    let macro_mean =
        if nonempty.is_empty() { 0.0 } else { nonempty.iter().sum::<f64>() / nonempty.len() as f64 };
    let report = StratifiedReport {
        per_category,
        all_gqs,
        weighted: full.accuracy(),
        full,
        macro_mean,
        subcorpora: subs,
    };
    Ok((report, rejects))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Kind(QuantifierKind),
    #[serde(with = "unmatched")]
    Unmatched,
}

mod unmatched {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("unmatched")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "unmatched" => Ok(()),
            other => Err(serde::de::Error::custom(format!("expected `unmatched`, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for Slot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slot::Kind(k) => write!(f, "{k}"),
            Slot::Unmatched => f.write_str("unmatched"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub premise: Slot,
    pub hypothesis: Slot,
    pub n: u64,
    pub accuracy: f64,
    /// Overall accuracy minus the cell's.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub overall: CellStat,
    pub cells: Vec<PairCell>,
}

impl PairwiseMatrix {
    pub fn cell(&self, premise: Slot, hypothesis: Slot) -> Option<&PairCell> {
        self.cells.iter().find(|c| c.premise == premise && c.hypothesis == hypothesis)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("premise\thypothesis\tn\taccuracy\tgap\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{:.6}",
                c.premise, c.hypothesis, c.n, c.accuracy, c.gap
            );
        }
        out
    }
}

/// The premise slot of an entry: the kind of its first detection in
/// sentence order, so each entry lands in exactly one premise row.
fn premise_slot(e: &AnnotatedEntry, field: &str) -> Slot {
    e.detections
        .get(field)
        .and_then(|d| d.first())
        .map_or(Slot::Unmatched, |m| Slot::Kind(m.kind))
}

/// Accuracy per (premise category, hypothesis category) pair. An entry
/// contributes once per distinct hypothesis category. Empty cells are omitted.
pub fn pairwise_matrix(
    corpus: &[AnnotatedEntry],
    premise_field: &str,
    hypothesis_field: &str,
) -> Result<(PairwiseMatrix, Vec<Reject>)> {
    check_field(premise_field)?;
    check_field(hypothesis_field)?;
    let mut rejects = Vec::new();
    let mut overall = CellStat::default();
    let mut cells: BTreeMap<(Slot, Slot), CellStat> = BTreeMap::new();
    for (e, ok) in split_labeled(corpus, &mut rejects) {
        overall.add(ok);
        let p = premise_slot(e, premise_field);
        let hs: Vec<Slot> = match e.kinds(hypothesis_field) {
            ks if ks.is_empty() => vec![Slot::Unmatched],
            ks => ks.into_iter().map(Slot::Kind).collect(),
        };
        for h in hs {
            cells.entry((p, h)).or_default().add(ok);
        }
    }
    let acc = overall.accuracy();
    let cells = cells
        .into_iter()
        .map(|((premise, hypothesis), c)| PairCell {
            premise,
            hypothesis,
            n: c.n,
            accuracy: c.accuracy(),
            gap: acc - c.accuracy(),
        })
        .collect();
    Ok((PairwiseMatrix { overall, cells }, rejects))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueLexicon(HashSet<String>);

impl CueLexicon {
    /// One cue per line; `#` comments.
    pub fn parse(src: &str) -> Self {
        CueLexicon(
            src.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }
}

impl Default for CueLexicon {
    fn default() -> Self {
        CueLexicon::parse(DEFAULT_NEGATION_CUES)
    }
}

/// Entries whose `field` has a quantifier detection and a negation cue
/// (matched on lemma or surface form). Scope is not analysed.
pub fn negation_cooccurrence<'a>(
    corpus: &'a [AnnotatedEntry],
    field: &str,
    cues: &CueLexicon,
) -> Vec<&'a AnnotatedEntry> {
    corpus
        .iter()
        .filter(|e| e.detections.get(field).is_some_and(|d| !d.is_empty()))
        .filter(|e| {
            e.entry.sentence(field).is_some_and(|s| {
                s.tokens.iter().any(|t| cues.contains(&t.lemma) || cues.contains(&t.surface))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Label;

    fn det(kind: QuantifierKind, start: usize) -> DetectionMatch {
        DetectionMatch {
            kind,
            char_span: (start, start + 1),
            token_span: (1, 1),
            raw_numeral: None,
            parsed_k: None,
            parsed_p: None,
        }
    }

    fn entry(
        uid: &str,
        premise: &[QuantifierKind],
        hypothesis: &[QuantifierKind],
        correct: bool,
    ) -> AnnotatedEntry {
        let mut detections = BTreeMap::new();
        detections.insert("premise".to_string(), premise.iter().enumerate().map(|(i, &k)| det(k, i)).collect());
        detections.insert("hypothesis".to_string(), hypothesis.iter().enumerate().map(|(i, &k)| det(k, i)).collect());
        AnnotatedEntry {
            entry: CorpusEntry {
                uid: uid.into(),
                gold_label: Some(Label::Neutral),
                predicted_label: Some(if correct { Label::Neutral } else { Label::Entailment }),
                ..CorpusEntry::default()
            },
            detections,
        }
    }

    use QuantifierKind::{All, Exactly, MoreThan, Most};

    #[test]
    fn empty_corpus_counts() {
        let c = count_categories(&[], "hypothesis").unwrap();
        assert!(c.counts.values().all(|&v| v == 0));
        assert_eq!(c.frequency(), 0.0);
        assert!(matches!(count_categories(&[], "headline"), Err(Error::UnknownField(_))));
    }

    #[test]
    fn planted_detection() {
        let mut corpus: Vec<_> = (0..9).map(|i| entry(&i.to_string(), &[], &[], true)).collect();
        corpus.push(entry("9", &[], &[MoreThan], true));
        let c = count_categories(&corpus, "hypothesis").unwrap();
        assert_eq!(c.counts[&MoreThan], 1);
        assert_eq!(c.frequency(), 0.1);
    }

    #[test]
    fn per_entry_versus_per_occurrence() {
        let corpus = vec![entry("a", &[], &[QuantifierKind::Some; 3], true)];
        let c = count_categories(&corpus, "hypothesis").unwrap();
        assert_eq!(c.counts[&QuantifierKind::Some], 1);
        assert_eq!(c.occurrences[&QuantifierKind::Some], 3);
    }

    #[test]
    fn zipf_examples() {
        let rows = zipf_table([("a", 2), ("b", 1), ("c", 1)]).unwrap();
        let rel: Vec<f64> = rows.iter().map(|r| r.relative).collect();
        let cum: Vec<f64> = rows.iter().map(|r| r.cumulative).collect();
        assert_eq!(rel, vec![0.5, 0.25, 0.25]);
        assert_eq!(cum, vec![0.5, 0.75, 1.0]);
        let rows = zipf_table([("x", 0), ("y", 7)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].relative, 1.0);
        assert!(zipf_table([("x", 0u64)]).is_err());
        assert!(zipf_table(Vec::<(&str, u64)>::new()).is_err());
    }

    #[test]
    fn stratified_examples() {
        let all_right = vec![entry("a", &[], &[Most], true), entry("b", &[], &[], true)];
        let (r, _) = stratified_accuracy(&[&all_right], "hypothesis").unwrap();
        assert_eq!(r.per_category[&Most].accuracy(), 1.0);
        assert_eq!((r.all_gqs.accuracy(), r.full.accuracy()), (1.0, 1.0));

        let two = vec![
            entry("a", &[], &[QuantifierKind::Some], true),
            entry("b", &[], &[], false),
        ];
        let (r, rejects) = stratified_accuracy(&[&two], "hypothesis").unwrap();
        assert!(rejects.is_empty());
        assert_eq!(r.per_category[&QuantifierKind::Some].accuracy(), 1.0);
        assert_eq!(r.all_gqs.accuracy(), 1.0);
        assert_eq!(r.full.accuracy(), 0.5);
        assert_eq!(r.weighted, r.full.accuracy());
    }

    #[test]
    fn weighted_over_subcorpora() {
        let a = vec![entry("1", &[], &[], true), entry("2", &[], &[], true), entry("3", &[], &[], false)];
        let b = vec![entry("4", &[], &[], true)];
        let (r, _) = stratified_accuracy(&[&a, &b], "hypothesis").unwrap();
        assert_eq!(r.weighted, 0.75);
        assert!((r.macro_mean - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_labels_are_rejected() {
        let mut e = entry("x", &[], &[], true);
        e.entry.predicted_label = None;
        let (r, rejects) = stratified_accuracy(&[&[e]], "hypothesis").unwrap();
        assert_eq!(r.full.n, 0);
        assert_eq!(rejects.len(), 1);
    }

    #[test]
    fn pairwise_cells() {
        let corpus = vec![entry("a", &[QuantifierKind::Some], &[QuantifierKind::Some], true)];
        let (m, _) = pairwise_matrix(&corpus, "premise", "hypothesis").unwrap();
        let some = Slot::Kind(QuantifierKind::Some);
        let c = m.cell(some, some).unwrap();
        assert_eq!((c.n, c.accuracy, c.gap), (1, 1.0, 0.0));
        assert!(m.cell(Slot::Unmatched, some).is_none());
        assert_eq!(m.cells.len(), 1);
    }

    #[test]
    fn pairwise_marginals_match_stratified_counts() {
        let corpus = vec![
            entry("a", &[All, Exactly], &[Exactly, Most], true),
            entry("b", &[], &[Exactly], false),
            entry("c", &[Most], &[], true),
            entry("d", &[Exactly], &[Exactly, Exactly], false),
        ];
        let (m, _) = pairwise_matrix(&corpus, "premise", "hypothesis").unwrap();
        let (r, _) = stratified_accuracy(&[&corpus], "hypothesis").unwrap();
        for (k, stat) in &r.per_category {
            let sum: u64 = m.cells.iter().filter(|c| c.hypothesis == Slot::Kind(*k)).map(|c| c.n).sum();
            assert_eq!(sum, stat.n, "{k}");
        }
        let unmatched: u64 = m.cells.iter().filter(|c| c.hypothesis == Slot::Unmatched).map(|c| c.n).sum();
        assert_eq!(unmatched, r.full.n - r.all_gqs.n);
    }

    #[test]
    fn slot_serialization() {
        assert_eq!(serde_json::to_string(&Slot::Unmatched).unwrap(), "\"unmatched\"");
        assert_eq!(serde_json::to_string(&Slot::Kind(Most)).unwrap(), "\"most\"");
        assert_eq!(serde_json::from_str::<Slot>("\"unmatched\"").unwrap(), Slot::Unmatched);
        assert_eq!(serde_json::from_str::<Slot>("\"few\"").unwrap(), Slot::Kind(QuantifierKind::Few));
    }

    #[test]
    fn default_cues() {
        let cues = CueLexicon::default();
        for w in ["no", "Not", "n't", "without"] {
            assert!(cues.contains(w), "{w}");
        }
        assert!(!cues.contains("all"));
    }
}

//! NLI / QA pair files and their link to dependency annotations.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conllu::Sentence;
use crate::error::Result;
use crate::oracle::Label;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FieldText {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub uid: String,
    /// Keyed by canonical field name (`premise`, `hypothesis`, …).
    pub fields: BTreeMap<String, FieldText>,
    pub gold_label: Option<Label>,
    pub predicted_label: Option<Label>,
}

impl CorpusEntry {
    pub fn sentence(&self, field: &str) -> Option<&Sentence> {
        self.fields.get(field).and_then(|f| f.sentence.as_ref())
    }
}

/// An input line that could not become an entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uid: Option<String>,
    pub reason: String,
}

/// Where each canonical field lives in the source records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMap {
    /// `(canonical name, source key)` pairs; every one is required.
    pub fields: Vec<(String, String)>,
    pub label: Option<String>,
    pub prediction: Option<String>,
    pub uid: String,
}

impl FieldMap {
    pub fn nli() -> Self {
        FieldMap {
            fields: vec![
                ("premise".into(), "premise".into()),
                ("hypothesis".into(), "hypothesis".into()),
            ],
            label: Some("label".into()),
            prediction: None,
            uid: "uid".into(),
        }
    }

    pub fn qa() -> Self {
        FieldMap {
            fields: vec![
                ("question".into(), "question".into()),
                ("context".into(), "context".into()),
            ],
            label: None,
            prediction: None,
            uid: "id".into(),
        }
    }

    pub fn with_field(mut self, canonical: &str, key: &str) -> Self {
        match self.fields.iter_mut().find(|(c, _)| c == canonical) {
            Some(slot) => slot.1 = key.to_string(),
            None => self.fields.push((canonical.to_string(), key.to_string())),
        }
        self
    }
}

/// Normalizes a label value. Integers follow the MNLI convention
/// (0 entailment, 1 neutral, 2 contradiction).
pub fn normalize_label(v: &Value) -> std::result::Result<Label, String> {
    match v {
        Value::String(s) => s.parse(),
        Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(Label::Entailment),
            Some(1) => Ok(Label::Neutral),
            Some(2) => Ok(Label::Contradiction),
            _ => Err(format!("unknown label `{n}`")),
        },
        other => Err(format!("unknown label `{other}`")),
    }
}

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub entries: Vec<CorpusEntry>,
    pub rejects: Vec<Reject>,
    /// Non-blank lines read.
    pub lines: usize,
}

fn parse_entry(line: &str, lineno: usize, map: &FieldMap) -> std::result::Result<CorpusEntry, Reject> {
    let reject = |uid: Option<String>, reason: String| Reject { line: lineno, uid, reason };
    let obj: serde_json::Map<String, Value> = match serde_json::from_str(line) {
        Ok(Value::Object(o)) => o,
        Ok(_) => return Err(reject(None, "line is not a JSON object".into())),
        Err(e) => return Err(reject(None, format!("invalid JSON: {e}"))),
    };
    let uid = obj.get(&map.uid).and_then(text_of).unwrap_or_else(|| lineno.to_string());
    let mut entry = CorpusEntry { uid: uid.clone(), ..CorpusEntry::default() };
    for (canonical, key) in &map.fields {
        match obj.get(key).and_then(|v| v.as_str()) {
            Some(raw) => {
                entry.fields.insert(canonical.clone(), FieldText { raw: raw.to_string(), sentence: None });
            }
            None => return Err(reject(Some(uid), format!("missing field `{key}`"))),
        }
    }
    let read_label = |key: &Option<String>| -> std::result::Result<Option<Label>, Reject> {
        let Some(key) = key else { return Ok(None) };
        match obj.get(key) {
            Some(v) => normalize_label(v).map(Some).map_err(|e| reject(Some(uid.clone()), e)),
            None => Err(reject(Some(uid.clone()), format!("missing field `{key}`"))),
        }
    };
    entry.gold_label = read_label(&map.label)?;
    entry.predicted_label = read_label(&map.prediction)?;
    Ok(entry)
}

/// Loads a JSONL pair file. Bad lines become rejects; only I/O errors fail.
pub fn load_pairs_jsonl<R: BufRead>(input: R, map: &FieldMap) -> Result<LoadReport> {
    let mut report = LoadReport::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match parse_entry(&line, i + 1, map) {
            Ok(e) => report.entries.push(e),
            Err(r) => report.rejects.push(r),
        }
    }
    Ok(report)
}

/// Attaches annotated sentences to entries by `(uid, field)`. Sentences that
/// match no entry field are returned as rejects (line 0).
pub fn attach_sentences(entries: &mut [CorpusEntry], sentences: Vec<Sentence>) -> Vec<Reject> {
    let index: HashMap<String, usize> =
        entries.iter().enumerate().map(|(i, e)| (e.uid.clone(), i)).collect();
    let mut rejects = Vec::new();
    for s in sentences {
        let field = s.source_field.as_str();
        let slot = index.get(&s.uid).and_then(|&i| entries[i].fields.get_mut(field));
        match slot {
            Some(ft) => ft.sentence = Some(s),
            None => rejects.push(Reject {
                line: 0,
                uid: Some(s.uid.clone()),
                reason: format!("annotation for `{}/{field}` matches no entry field", s.uid),
            }),
        }
    }
    rejects
}

/// Builds entries straight from annotated sentences, grouped by uid in
/// first-appearance order.
pub fn entries_from_sentences(sentences: Vec<Sentence>) -> Vec<CorpusEntry> {
    let mut order: Vec<CorpusEntry> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in sentences {
        let i = *index.entry(s.uid.clone()).or_insert_with(|| {
            order.push(CorpusEntry { uid: s.uid.clone(), ..CorpusEntry::default() });
            order.len() - 1
        });
        let field = s.source_field.as_str().to_string();
        order[i].fields.insert(field, FieldText { raw: s.raw_text(), sentence: Some(s) });
    }
    order
}

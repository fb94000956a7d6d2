//! Template-based generation of labeled premise/hypothesis pairs.
//!
//! A template pairs two surface strings with two formulas. Both may contain
//! `{slot}` placeholders; surfaces also accept filters, `{n|word}` (number
//! spelled out) and `{n|cap}` (first letter upper-cased). In formulas a
//! string that is exactly `{slot}` is replaced by the bound value itself, so
//! a slot can supply a number, a set name or a whole sub-formula. Inserted
//! text and values are expanded again, which lets a hypothesis slot carry
//! placeholders of its own.
//!
//! Labels always come from the oracle, never from the template.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::formula::{Formula, Signature};
use crate::oracle::{Label, Oracle};
use crate::semantics::QuantifierKind;

pub const DEFAULT_TEMPLATES: &str = include_str!("../data/templates/gqnli.json");

const MAX_DEPTH: usize = 8;
const BATCH: usize = 32;

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)((?:\|[a-z]+)*)\}").unwrap())
}

/// A slot filler: the text put into surfaces and the value put into formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawLexeme")]
pub struct Lexeme {
    pub text: String,
    pub value: Value,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLexeme {
    Full { text: String, value: Value },
    Number(u64),
    Text(String),
}

impl From<RawLexeme> for Lexeme {
    fn from(r: RawLexeme) -> Self {
        match r {
            RawLexeme::Full { text, value } => Lexeme { text, value },
            RawLexeme::Number(n) => Lexeme::number(n),
            RawLexeme::Text(t) => Lexeme::word(t),
        }
    }
}

impl Lexeme {
    pub fn word(text: impl Into<String>) -> Self {
        let text = text.into();
        Lexeme { value: Value::String(text.clone()), text }
    }

    pub fn number(n: u64) -> Self {
        Lexeme { text: n.to_string(), value: Value::from(n) }
    }

    /// Text used when the value is spliced into a longer string.
    fn inline(&self) -> Option<String> {
        match &self.value {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlot")]
pub struct SlotDomain {
    pub values: Vec<Lexeme>,
    /// Content slots hold non-quantifier words and may be substituted freely.
    pub content: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlot {
    #[serde(default)]
    values: Vec<Lexeme>,
    range: Option<(u64, u64)>,
    #[serde(default)]
    content: bool,
}

impl TryFrom<RawSlot> for SlotDomain {
    type Error = String;

    fn try_from(r: RawSlot) -> std::result::Result<Self, String> {
        let mut values = r.values;
        if let Some((lo, hi)) = r.range {
            if lo > hi {
                return Err(format!("empty range {lo}..={hi}"));
            }
            values.extend((lo..=hi).map(Lexeme::number));
        }
        if values.is_empty() {
            return Err("slot has no values".into());
        }
        Ok(SlotDomain { values, content: r.content })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub premise_formula: Value,
    pub hypothesis_formula: Value,
    pub signature: Value,
    pub slots: BTreeMap<String, SlotDomain>,
}

pub type Bindings = BTreeMap<String, Lexeme>;

impl Template {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Template { template: self.id.clone(), message: message.into() }
    }

    /// Checks that every placeholder names a declared slot and uses known filters.
    pub fn validate(&self) -> Result<()> {
        let mut texts = vec![self.premise.clone(), self.hypothesis.clone()];
        for v in [&self.premise_formula, &self.hypothesis_formula, &self.signature] {
            collect_strings(v, &mut texts);
        }
        for d in self.slots.values() {
            for l in &d.values {
                texts.push(l.text.clone());
                collect_strings(&l.value, &mut texts);
            }
        }
        for t in &texts {
            for c in placeholder().captures_iter(t) {
                if !self.slots.contains_key(&c[1]) {
                    return Err(self.err(format!("placeholder `{}` has no slot", &c[0])));
                }
                if let Some(f) = c[2].split('|').find(|f| !f.is_empty() && !["word", "cap"].contains(f)) {
                    return Err(self.err(format!("unknown filter `{f}` in `{}`", &c[0])));
                }
            }
        }
        Ok(())
    }

    fn render_text(&self, s: &str, b: &Bindings, depth: usize) -> Result<String> {
        if depth > MAX_DEPTH {
            return Err(self.err("placeholder expansion too deep"));
        }
        let mut failure = None;
        let out = placeholder().replace_all(s, |c: &Captures| {
            match self.render_one(c, b, depth) {
                Ok(t) => t,
                Err(e) => {
                    failure.get_or_insert(e);
                    String::new()
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(out.into_owned()),
        }
    }

    fn render_one(&self, c: &Captures, b: &Bindings, depth: usize) -> Result<String> {
        let lex = self.binding(&c[1], b)?;
        let filters: Vec<&str> = c[2].split('|').filter(|f| !f.is_empty()).collect();
        let mut text = if filters.contains(&"word") {
            let n = lex.value.as_u64().ok_or_else(|| self.err(format!("`{}` is not a count", &c[1])))?;
            number_words(n)
        } else {
            self.render_text(&lex.text, b, depth + 1)?
        };
        if filters.contains(&"cap") {
            text = capitalize(&text);
        }
        Ok(text)
    }

    fn binding<'a>(&self, slot: &str, b: &'a Bindings) -> Result<&'a Lexeme> {
        b.get(slot).ok_or_else(|| self.err(format!("missing binding for slot `{slot}`")))
    }

    fn render_value(&self, v: &Value, b: &Bindings, depth: usize) -> Result<Value> {
        if depth > MAX_DEPTH {
            return Err(self.err("placeholder expansion too deep"));
        }
        Ok(match v {
            Value::String(s) => match placeholder().captures(s) {
                Some(c) if c[0].len() == s.len() && c[2].is_empty() => {
                    self.render_value(&self.binding(&c[1], b)?.value, b, depth + 1)?
                }
                Some(_) => {
                    let mut failure = None;
                    let out = placeholder().replace_all(s, |c: &Captures| {
                        match self.binding(&c[1], b).and_then(|l| {
                            l.inline().ok_or_else(|| self.err(format!("`{}` cannot be inlined", &c[1])))
                        }) {
                            Ok(t) => t,
                            Err(e) => {
                                failure.get_or_insert(e);
                                String::new()
                            }
                        }
                    });
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    Value::String(out.into_owned())
                }
                None => v.clone(),
            },
            Value::Array(xs) => {
                Value::Array(xs.iter().map(|x| self.render_value(x, b, depth)).collect::<Result<_>>()?)
            }
            Value::Object(o) => Value::Object(
                o.iter()
                    .map(|(k, x)| Ok((k.clone(), self.render_value(x, b, depth)?)))
                    .collect::<Result<_>>()?,
            ),
            _ => v.clone(),
        })
    }

    fn parse<T: serde::de::DeserializeOwned>(&self, what: &str, v: &Value, b: &Bindings) -> Result<T> {
        let rendered = self.render_value(v, b, 0)?;
        serde_json::from_value(rendered).map_err(|e| self.err(format!("{what}: {e}")))
    }
}

fn collect_strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(xs) => xs.iter().for_each(|x| collect_strings(x, out)),
        Value::Object(o) => o.values().for_each(|x| collect_strings(x, out)),
        _ => {}
    }
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

/// English words for `n` (below one million; larger values stay digits).
pub fn number_words(n: u64) -> String {
    const UNITS: [&str; 20] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
        "nineteen",
    ];
    const TENS: [&str; 10] =
        ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];
    fn below_thousand(n: u64) -> String {
        let mut parts = Vec::new();
        if n >= 100 {
            parts.push(format!("{} hundred", UNITS[(n / 100) as usize]));
        }
        let r = n % 100;
        if r >= 20 {
            let t = TENS[(r / 10) as usize];
            parts.push(if r % 10 == 0 { t.to_string() } else { format!("{t}-{}", UNITS[(r % 10) as usize]) });
        } else if r > 0 || n == 0 {
            parts.push(UNITS[r as usize].to_string());
        }
        parts.join(" ")
    }
    match n {
        0..=999 => below_thousand(n),
        1_000..=999_999 if n % 1000 == 0 => format!("{} thousand", below_thousand(n / 1000)),
        1_000..=999_999 => format!("{} thousand {}", below_thousand(n / 1000), below_thousand(n % 1000)),
        _ => n.to_string(),
    }
}

/// Parses a JSON array of templates and validates each one.
pub fn load_templates(src: &str) -> Result<Vec<Template>> {
    let ts: Vec<Template> = serde_json::from_str(src)
        .map_err(|e| Error::Template { template: "<file>".into(), message: e.to_string() })?;
    let mut seen = HashSet::new();
    for t in &ts {
        if !seen.insert(t.id.as_str()) {
            return Err(t.err("duplicate template id"));
        }
        t.validate()?;
    }
    Ok(ts)
}

pub fn default_templates() -> Vec<Template> {
    load_templates(DEFAULT_TEMPLATES).expect("shipped templates are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub template: String,
    pub bindings: Bindings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedItem {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    pub categories: BTreeSet<QuantifierKind>,
    pub provenance: Provenance,
    pub premise_formula: Formula,
    pub hypothesis_formula: Formula,
    pub signature: Signature,
    pub bound_used: u32,
}

impl GeneratedItem {
    /// Labels the stored formulas afresh.
    pub fn relabel(&self, oracle: &Oracle) -> Result<Label> {
        let sig = self.signature.with_bound(self.bound_used)?;
        Ok(oracle.label(&self.premise_formula, &self.hypothesis_formula, &sig)?.label)
    }
}

/// Renders and labels one template under `bindings`. Non-content slots must
/// be bound to a value of their domain; content slots take any lexeme.
/// `bound` overrides the template signature's universe bound.
pub fn instantiate(
    t: &Template,
    bindings: &Bindings,
    oracle: &Oracle,
    bound: Option<u32>,
) -> Result<GeneratedItem> {
    for (name, dom) in &t.slots {
        let lex = t.binding(name, bindings)?;
        if !dom.content && !dom.values.iter().any(|v| v.value == lex.value) {
            return Err(t.err(format!("value `{}` is outside the domain of slot `{name}`", lex.text)));
        }
    }
    let premise = t.render_text(&t.premise, bindings, 0)?;
    let hypothesis = t.render_text(&t.hypothesis, bindings, 0)?;
    let pf: Formula = t.parse("premise formula", &t.premise_formula, bindings)?;
    let hf: Formula = t.parse("hypothesis formula", &t.hypothesis_formula, bindings)?;
    let mut sig: Signature = t.parse("signature", &t.signature, bindings)?;
    if let Some(b) = bound {
        sig = sig.with_bound(b)?;
    }
    pf.validate(&sig)?;
    hf.validate(&sig)?;
    let label = oracle.label(&pf, &hf, &sig)?;
    let categories = pf.quantifier_kinds().union(&hf.quantifier_kinds()).copied().collect();
    Ok(GeneratedItem {
        uid: String::new(),
        premise,
        hypothesis,
        label: label.label,
        categories,
        provenance: Provenance {
            template: t.id.clone(),
            bindings: bindings.clone(),
            seed: None,
            attempt: None,
            augmented_from: None,
        },
        premise_formula: pf,
        hypothesis_formula: hf,
        signature: sig,
        bound_used: label.bound_used,
    })
}

/// Rebinds content slots of `item` and re-verifies the label.
///
/// Fails with [`Error::SubstitutionCollision`] when a new lexeme equals
/// another binding or a set name already in the item, and with
/// [`Error::LabelChanged`] if the oracle disagrees with the stored label.
pub fn substitute(
    item: &GeneratedItem,
    t: &Template,
    changes: &Bindings,
    oracle: &Oracle,
) -> Result<GeneratedItem> {
    if t.id != item.provenance.template {
        return Err(t.err(format!("item was built from template `{}`", item.provenance.template)));
    }
    let old = &item.provenance.bindings;
    let mut next = old.clone();
    for (slot, lex) in changes {
        if !t.slots.get(slot).is_some_and(|d| d.content) {
            return Err(t.err(format!("slot `{slot}` is not a content slot")));
        }
        next.insert(slot.clone(), lex.clone());
    }
    for (slot, lex) in changes {
        let from = old.get(slot).map_or(String::new(), |l| l.text.clone());
        let clash_binding = next.iter().any(|(s, l)| {
            s != slot && (l.text == lex.text || (l.inline().is_some() && l.inline() == lex.inline()))
        });
        let renamed = old.get(slot).and_then(Lexeme::inline);
        let clash_set = lex
            .inline()
            .is_some_and(|v| Some(&v) != renamed.as_ref() && item.signature.set_names().contains(&v));
        if clash_binding || clash_set {
            return Err(Error::SubstitutionCollision { from, to: lex.text.clone() });
        }
    }
    let mut out = instantiate(t, &next, oracle, Some(item.bound_used))?;
    if out.label != item.label {
        return Err(Error::LabelChanged { before: item.label.to_string(), after: out.label.to_string() });
    }
    out.uid = item.uid.clone();
    out.provenance.seed = item.provenance.seed;
    out.provenance.attempt = item.provenance.attempt;
    out.provenance.augmented_from = item.provenance.augmented_from.clone();
    Ok(out)
}

/// Draws a replacement for every content slot from `lexicon` (falling back
/// to the template's own domain), avoiding lexemes already in the item.
pub fn augment_substitute(
    item: &GeneratedItem,
    t: &Template,
    lexicon: &BTreeMap<String, Vec<Lexeme>>,
    seed: u64,
    oracle: &Oracle,
) -> Result<GeneratedItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = item.provenance.bindings.clone();
    let mut changes = Bindings::new();
    for (slot, dom) in t.slots.iter().filter(|(_, d)| d.content) {
        let pool = lexicon.get(slot).unwrap_or(&dom.values);
        let taken: HashSet<String> = current
            .iter()
            .filter(|(s, _)| *s != slot)
            .flat_map(|(_, l)| [Some(l.text.clone()), l.inline()])
            .flatten()
            .chain(item.signature.set_names().iter().cloned())
            .collect();
        let own = current.get(slot).and_then(Lexeme::inline);
        let choices: Vec<&Lexeme> = pool
            .iter()
            .filter(|l| !taken.contains(&l.text) && l.inline().map_or(true, |v| !taken.contains(&v) || Some(&v) == own.as_ref()))
            .collect();
        if choices.is_empty() {
            continue;
        }
        let pick = choices[rng.gen_range(0..choices.len())].clone();
        current.insert(slot.clone(), pick.clone());
        changes.insert(slot.clone(), pick);
    }
    substitute(item, t, &changes, oracle)
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub count: usize,
    pub seed: u64,
    /// Allowed relative deviation of each label count from `count / 3`;
    /// `None` disables balancing.
    pub label_balance: Option<f64>,
    pub retry_budget: usize,
    /// Substituted variants emitted per generated item.
    pub augment: usize,
    pub universe_bound: Option<u32>,
    pub oracle: Oracle,
}

impl GenerateConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        GenerateConfig {
            count,
            seed,
            label_balance: Some(0.1),
            retry_budget: count.saturating_mul(100).max(1000),
            augment: 0,
            universe_bound: None,
            oracle: Oracle::default(),
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(templates: &[Template], rng: &mut ChaCha8Rng) -> (usize, Bindings) {
    let i = rng.gen_range(0..templates.len());
    let bindings = templates[i]
        .slots
        .iter()
        .map(|(name, d)| (name.clone(), d.values[rng.gen_range(0..d.values.len())].clone()))
        .collect();
    (i, bindings)
}

struct Balance {
    lower: usize,
    upper: usize,
}

impl Balance {
    fn new(count: usize, tolerance: f64) -> Self {
        // counts must stay within `tolerance * target` of the target; when the
        // target is fractional the nearest integers are always allowed
        const EPS: f64 = 1e-9;
        let target = count as f64 / 3.0;
        let lower = (target * (1.0 - tolerance) - EPS).ceil().min((target + EPS).floor());
        let upper = (target * (1.0 + tolerance) + EPS).floor().max((target - EPS).ceil());
        Balance { lower: lower.max(0.0) as usize, upper: upper as usize }
    }

    /// Whether one more `label` keeps a balanced finish reachable.
    fn admits(&self, hist: &BTreeMap<Label, usize>, label: Label, count: usize) -> bool {
        let total: usize = hist.values().sum();
        if hist[&label] >= self.upper {
            return false;
        }
        let owed: usize =
            Label::ALL.iter().filter(|&&l| l != label).map(|l| self.lower.saturating_sub(hist[l])).sum();
        owed + total < count
    }
}

fn histogram_string(hist: &BTreeMap<Label, usize>) -> String {
    Label::ALL.iter().map(|l| format!("{l}={}", hist[l])).collect::<Vec<_>>().join(" ")
}

/// Samples template instantiations until `count` distinct items are accepted.
///
/// Attempt `i` draws from ChaCha8 stream `i << 16` of `seed`; augmentation
/// variant `j` of that attempt uses stream `(i << 16) + j + 1`. Items whose
/// instantiation fails (for example an unsatisfiable premise) are resampled.
/// Output is sorted by uid.
pub fn generate(templates: &[Template], config: &GenerateConfig) -> Result<Vec<GeneratedItem>> {
    if config.count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    if templates.is_empty() {
        return Err(Error::Config("no templates".into()));
    }
    let balance = config.label_balance.map(|t| Balance::new(config.count, t));
    let mut hist: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut seen = HashSet::new();
    let mut accepted: Vec<(usize, GeneratedItem)> = Vec::new();
    let mut rejected = 0usize;
    let mut first_reject: Option<Error> = None;
    let mut attempt = 0usize;
    'outer: while attempt < config.retry_budget {
        let end = (attempt + BATCH).min(config.retry_budget);
        let batch: Vec<(usize, Result<GeneratedItem>)> = (attempt..end)
            .into_par_iter()
            .map(|a| {
                let (ti, b) = draw(templates, &mut rng_for(config.seed, (a as u64) << 16));
                (ti, instantiate(&templates[ti], &b, &config.oracle, config.universe_bound))
            })
            .collect();
        for (offset, (ti, res)) in batch.into_iter().enumerate() {
            let a = attempt + offset;
            let mut item = match res {
                Ok(item) => item,
                Err(e) => {
                    rejected += 1;
                    first_reject.get_or_insert(e);
                    continue;
                }
            };
            if !seen.insert((item.premise.clone(), item.hypothesis.clone())) {
                continue;
            }
            if let Some(b) = &balance {
                if !b.admits(&hist, item.label, config.count) {
                    continue;
                }
            }
            *hist.get_mut(&item.label).unwrap() += 1;
            item.uid = format!("{}-{a:07}", templates[ti].id);
            item.provenance.seed = Some(config.seed);
            item.provenance.attempt = Some(a as u64);
            accepted.push((ti, item));
            if accepted.len() == config.count {
                break 'outer;
            }
        }
        attempt = end;
    }
    let balanced = balance.as_ref().map_or(true, |b| {
        hist.values().all(|&c| c >= b.lower && c <= b.upper)
    });
    if accepted.len() < config.count || !balanced {
        let mut histogram = format!("{} ({} of {} items", histogram_string(&hist), accepted.len(), config.count);
        if let Some(e) = first_reject {
            histogram.push_str(&format!("; {rejected} rejected, first: {e}"));
        }
        histogram.push(')');
        return Err(Error::Balance { histogram });
    }

    let mut out = Vec::with_capacity(accepted.len() * (1 + config.augment));
    for (ti, item) in accepted {
        let t = &templates[ti];
        let attempt = item.provenance.attempt.unwrap_or(0);
        let variants: Vec<GeneratedItem> = (0..config.augment)
            .into_par_iter()
            .map(|j| {
                let seed = rng_for(config.seed, (attempt << 16) + j as u64 + 1).gen();
                let mut v = augment_substitute(&item, t, &BTreeMap::new(), seed, &config.oracle)?;
                v.uid = format!("{}-a{j}", item.uid);
                v.provenance.augmented_from = Some(item.uid.clone());
                Ok(v)
            })
            .collect::<Result<_>>()?;
        out.push(item);
        out.extend(variants);
    }
    out.sort_by(|a, b| a.uid.cmp(&b.uid));
    Ok(out)
}

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::Context;
use gqkit::conllu::{parse_conllu_lenient, Sentence};
use gqkit::corpus::{attach_sentences, entries_from_sentences, load_pairs_jsonl, CorpusEntry, FieldMap, Reject};
use gqkit::detect::{compile_patterns, default_patterns, detect, DetectionMatch, PatternSet};
use gqkit::generate::{default_templates, generate, load_templates, GenerateConfig};
use gqkit::stats::{
    annotate, count_categories, negation_cooccurrence, pairwise_matrix, stratified_accuracy, zipf_table,
    zipf_tsv, AnnotatedEntry, CueLexicon,
};
use gqkit::{agreement, Label, LabelTask, NliLabel, Oracle, QuantifierKind};
use serde::Serialize;

use crate::output::{finish, json, jsonl, RejectRecord};
use crate::{data, usage, Command, Format, Options, Outcome};

pub const WORK_LIMIT_VAR: &str = "GQKIT_WORK_LIMIT";

pub fn run(cmd: Command, o: &Options) -> Outcome<()> {
    for p in o.input.iter().chain(&o.annotations).chain(&o.patterns).chain(&o.cues).chain(&o.templates) {
        if !p.is_file() {
            return Err(usage(format!("no such file: {}", p.display())));
        }
    }
    let needs_input = !matches!(cmd, Command::Generate);
    if needs_input && o.input.is_empty() {
        return Err(usage("--input is required"));
    }
    let oracle = oracle()?;
    let (body, rejects) = match cmd {
        Command::Detect => detect_cmd(o)?,
        Command::Stats => stats_cmd(o)?,
        Command::Label => label_cmd(o, &oracle)?,
        Command::Generate => generate_cmd(o, oracle)?,
        Command::Evaluate => evaluate_cmd(o)?,
        Command::Agreement => agreement_cmd(o)?,
    };
    finish(o.output.as_deref(), &body, &rejects)
}

fn oracle() -> Outcome<Oracle> {
    match std::env::var(WORK_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u128>()
            .map(Oracle::new)
            .map_err(|_| usage(format!("{WORK_LIMIT_VAR} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(Oracle::default()),
    }
}

type Produced = (String, Vec<RejectRecord>);

fn pick(o: &Options, default: Format, allowed: &[Format]) -> Outcome<Format> {
    let f = o.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!("format {f:?} is not available for this subcommand").to_lowercase()))
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(data)
}

fn patterns(o: &Options) -> Outcome<PatternSet> {
    match &o.patterns {
        Some(p) => compile_patterns(&read(p)?).with_context(|| format!("{}", p.display())).map_err(data),
        None => Ok(default_patterns()),
    }
}

fn sentences(path: &Path, rejects: &mut Vec<RejectRecord>) -> Outcome<Vec<Sentence>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display())).map_err(data)?;
    let report = parse_conllu_lenient(BufReader::new(file)).map_err(data)?;
    for e in report.errors {
        let line = match &e {
            gqkit::Error::Parse { line, .. } => *line,
            _ => 0,
        };
        rejects.push(RejectRecord::new(path, line, None, e.to_string()));
    }
    Ok(report.sentences)
}

fn from_rejects(path: &Path, rs: Vec<Reject>) -> impl Iterator<Item = RejectRecord> + '_ {
    rs.into_iter().map(move |r| RejectRecord::new(path, r.line, r.uid, r.reason))
}

#[derive(Serialize)]
struct DetectRecord<'a> {
    uid: &'a str,
    field: &'a str,
    #[serde(flatten)]
    m: &'a DetectionMatch,
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or(String::new(), T::to_string)
}

fn detect_cmd(o: &Options) -> Outcome<Produced> {
    let format = pick(o, Format::Jsonl, &[Format::Jsonl, Format::Json, Format::Tsv])?;
    let ps = patterns(o)?;
    let mut rejects = Vec::new();
    let mut all = Vec::new();
    for p in &o.input {
        all.extend(sentences(p, &mut rejects)?);
    }
    let found: Vec<(&Sentence, Vec<DetectionMatch>)> = all.iter().map(|s| (s, detect(s, &ps))).collect();
    let records = found.iter().flat_map(|(s, ms)| {
        ms.iter().map(|m| DetectRecord { uid: &s.uid, field: s.source_field.as_str(), m })
    });
    let body = match format {
        Format::Jsonl => jsonl(records)?,
        Format::Json => json(&records.collect::<Vec<_>>())?,
        Format::Tsv => {
            let mut out = String::from("uid\tfield\tkind\tchar_start\tchar_end\ttoken_start\ttoken_end\traw_numeral\tk\tp\n");
            for r in records {
                let m = r.m;
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.uid,
                    r.field,
                    m.kind,
                    m.char_span.0,
                    m.char_span.1,
                    m.token_span.0,
                    m.token_span.1,
                    m.raw_numeral.as_deref().unwrap_or(""),
                    opt(&m.parsed_k),
                    opt(&m.parsed_p)
                ));
            }
            out
        }
    };
    Ok((body, rejects))
}

fn field_map(o: &Options, label: bool, prediction: bool) -> FieldMap {
    let mut map = FieldMap::nli()
        .with_field("premise", &o.premise_field)
        .with_field("hypothesis", &o.hypothesis_field);
    map.label = label.then(|| o.label_field.clone());
    map.prediction = prediction.then(|| o.prediction_field.clone());
    map.uid = o.uid_field.clone();
    map
}

fn is_pairs(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

/// One annotated sub-corpus per input. JSONL inputs take sentences from
/// `--annotations`; CoNLL-U inputs carry their own.
fn corpora(
    o: &Options,
    map: &FieldMap,
    ps: &PatternSet,
    rejects: &mut Vec<RejectRecord>,
) -> Outcome<Vec<Vec<AnnotatedEntry>>> {
    let shared = o.annotations.len() == 1 && o.input.len() > 1;
    if !o.annotations.is_empty() && !shared && o.annotations.len() != o.input.len() {
        return Err(usage("give one --annotations file, or one per --input"));
    }
    let shared_sents = match shared {
        true => Some(sentences(&o.annotations[0], rejects)?),
        false => None,
    };
    let mut out = Vec::new();
    for (i, p) in o.input.iter().enumerate() {
        let entries: Vec<CorpusEntry> = if is_pairs(p) {
            let file = File::open(p).with_context(|| format!("opening {}", p.display())).map_err(data)?;
            let report = load_pairs_jsonl(BufReader::new(file), map).map_err(data)?;
            rejects.extend(from_rejects(p, report.rejects));
            let mut entries = report.entries;
            if let Some(s) = &shared_sents {
                // a shared file also covers the other inputs, so misses are expected
                attach_sentences(&mut entries, s.clone());
            } else if let Some(a) = o.annotations.get(i) {
                let unmatched = attach_sentences(&mut entries, sentences(a, rejects)?);
                rejects.extend(from_rejects(a, unmatched));
            }
            entries
        } else {
            entries_from_sentences(sentences(p, rejects)?)
        };
        out.push(annotate(entries, ps));
    }
    Ok(out)
}

#[derive(Serialize)]
struct StatsReport<'a> {
    field: &'a str,
    counts: gqkit::stats::CategoryCounts,
    negation_cooccurrence: usize,
    zipf: Vec<gqkit::stats::ZipfRow<QuantifierKind>>,
}

fn stats_cmd(o: &Options) -> Outcome<Produced> {
    let format = pick(o, Format::Tsv, &[Format::Tsv, Format::Json])?;
    let ps = patterns(o)?;
    let cues = match &o.cues {
        Some(p) => CueLexicon::parse(&read(p)?),
        None => CueLexicon::default(),
    };
    let mut rejects = Vec::new();
    let corpus: Vec<AnnotatedEntry> =
        corpora(o, &field_map(o, false, false), &ps, &mut rejects)?.into_iter().flatten().collect();
    let counts = count_categories(&corpus, &o.field).map_err(usage)?;
    let negated = negation_cooccurrence(&corpus, &o.field, &cues).len();
    let zipf = zipf_table(counts.occurrences.iter().map(|(k, v)| (*k, *v))).unwrap_or_default();
    let body = match format {
        Format::Json => json(&StatsReport { field: &o.field, counts, negation_cooccurrence: negated, zipf })?,
        _ => format!(
            "{}negation_cooccurrence\t{negated}\t\n\n{}",
            counts.to_tsv(),
            zipf_tsv(&zipf)
        ),
    };
    Ok((body, rejects))
}

#[derive(Serialize)]
struct LabelRecord {
    uid: String,
    #[serde(flatten)]
    result: NliLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_label: Option<Label>,
}

fn label_cmd(o: &Options, oracle: &Oracle) -> Outcome<Produced> {
    let format = pick(o, Format::Jsonl, &[Format::Jsonl, Format::Json, Format::Tsv])?;
    let mut rejects = Vec::new();
    let mut records = Vec::new();
    for p in &o.input {
        let file = File::open(p).with_context(|| format!("opening {}", p.display())).map_err(data)?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(data)?;
            if line.trim().is_empty() {
                continue;
            }
            let task: LabelTask = match serde_json::from_str(&line) {
                Ok(t) => t,
                Err(e) => {
                    rejects.push(RejectRecord::new(p, i + 1, None, e.to_string()));
                    continue;
                }
            };
            match task.run(oracle, Some(o.max_universe)) {
                Ok(result) => records.push(LabelRecord {
                    uid: task.uid,
                    result,
                    expected_label: task.expected_label,
                }),
                Err(e) => rejects.push(RejectRecord::new(p, i + 1, Some(task.uid), e.to_string())),
            }
        }
    }
    let body = match format {
        Format::Jsonl => jsonl(&records)?,
        Format::Json => json(&records)?,
        Format::Tsv => {
            let mut out = String::from("uid\tlabel\tbound_used\texpected_label\n");
            for r in &records {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    r.uid,
                    r.result.label,
                    r.result.bound_used,
                    opt(&r.expected_label)
                ));
            }
            out
        }
    };
    Ok((body, rejects))
}

fn generate_cmd(o: &Options, oracle: Oracle) -> Outcome<Produced> {
    let format = pick(o, Format::Jsonl, &[Format::Jsonl, Format::Json, Format::Tsv])?;
    let templates = match &o.templates {
        Some(p) => load_templates(&read(p)?).map_err(data)?,
        None => default_templates(),
    };
    let config = GenerateConfig {
        label_balance: (o.balance >= 0.0).then_some(o.balance),
        augment: o.augment,
        universe_bound: Some(o.max_universe),
        oracle,
        ..GenerateConfig::new(o.count as usize, o.seed)
    };
    let items = generate(&templates, &config).map_err(data)?;
    let body = match format {
        Format::Jsonl => jsonl(&items)?,
        Format::Json => json(&items)?,
        Format::Tsv => {
            let mut out = String::from("uid\tlabel\tpremise\thypothesis\n");
            for i in &items {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", i.uid, i.label, i.premise, i.hypothesis));
            }
            out
        }
    };
    Ok((body, Vec::new()))
}

#[derive(Serialize)]
struct EvaluateReport {
    stratified: gqkit::stats::StratifiedReport,
    pairwise: gqkit::stats::PairwiseMatrix,
}

fn evaluate_cmd(o: &Options) -> Outcome<Produced> {
    let format = pick(o, Format::Tsv, &[Format::Tsv, Format::Json])?;
    if let Some(p) = o.input.iter().find(|p| !is_pairs(p)) {
        return Err(usage(format!("evaluate reads JSONL prediction files, got {}", p.display())));
    }
    let ps = patterns(o)?;
    let mut rejects = Vec::new();
    let subs = corpora(o, &field_map(o, true, true), &ps, &mut rejects)?;
    let views: Vec<&[AnnotatedEntry]> = subs.iter().map(Vec::as_slice).collect();
    let (stratified, r1) = stratified_accuracy(&views, "hypothesis").map_err(data)?;
    let all: Vec<AnnotatedEntry> = subs.iter().flatten().cloned().collect();
    let (pairwise, _) = pairwise_matrix(&all, "premise", "hypothesis").map_err(data)?;
    rejects.extend(r1.into_iter().map(|r| RejectRecord::new(Path::new(""), r.line, r.uid, r.reason)));
    let body = match format {
        Format::Json => json(&EvaluateReport { stratified, pairwise })?,
        _ => format!("{}\n{}", stratified.to_tsv(), pairwise.to_tsv()),
    };
    Ok((body, rejects))
}

#[derive(Serialize)]
struct KappaReport {
    kappa: f64,
    items: usize,
    raters: u64,
}

fn agreement_cmd(o: &Options) -> Outcome<Produced> {
    let format = pick(o, Format::Tsv, &[Format::Tsv, Format::Json])?;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for p in &o.input {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(p)
            .with_context(|| format!("opening {}", p.display()))
            .map_err(data)?;
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.with_context(|| format!("{}", p.display())).map_err(data)?;
            let parsed: Result<Vec<u64>, _> = rec.iter().map(str::parse::<u64>).collect();
            match parsed {
                Ok(r) => rows.push(r),
                // a non-numeric first row is a header of category names
                Err(_) if i == 0 => {}
                Err(_) => {
                    let line = rec.position().map_or(i + 1, |pos| pos.line() as usize);
                    return Err(data(anyhow::anyhow!("{}:{line}: non-numeric count", p.display())));
                }
            }
        }
    }
    let kappa = agreement::fleiss_kappa(&rows).map_err(data)?;
    let report = KappaReport { kappa, items: rows.len(), raters: rows.first().map_or(0, |r| r.iter().sum()) };
    let body = match format {
        Format::Json => json(&report)?,
        _ => format!("kappa\titems\traters\n{:.12}\t{}\t{}\n", report.kappa, report.items, report.raters),
    };
    Ok((body, Vec::new()))
}

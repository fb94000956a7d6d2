//! CoNLL-U ingestion and the `lemma/deprel` serialization that detection
//! patterns run against.
//!
//! A `# sent_id = <uid>/<field>` comment ties a sentence to a field of a
//! corpus entry, e.g. `# sent_id = 17/hypothesis`. A separate `# field = …`
//! comment is honored as well. Without either the sentence is `plain`.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: u32,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    pub head: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceField {
    Premise,
    Hypothesis,
    Question,
    Context,
    #[default]
    Plain,
}

impl SourceField {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceField::Premise => "premise",
            SourceField::Hypothesis => "hypothesis",
            SourceField::Question => "question",
            SourceField::Context => "context",
            SourceField::Plain => "plain",
        }
    }
}

impl fmt::Display for SourceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "premise" => Ok(SourceField::Premise),
            "hypothesis" => Ok(SourceField::Hypothesis),
            "question" => Ok(SourceField::Question),
            "context" => Ok(SourceField::Context),
            "plain" => Ok(SourceField::Plain),
            other => Err(format!("unknown field `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub uid: String,
    pub source_field: SourceField,
    pub tokens: Vec<Token>,
    /// The `# text = …` comment, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl Sentence {
    /// Raw text: the `# text` comment or the space-joined surface forms.
    pub fn raw_text(&self) -> String {
        self.text.clone().unwrap_or_else(|| {
            self.tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
        })
    }
}

/// A serialized sentence with the character span of every token item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Serialized {
    pub text: String,
    /// Byte span of each `lemma/deprel` item, in token order.
    pub spans: Vec<(usize, usize)>,
}

impl Serialized {
    /// Tokens (0-based positions) overlapping the byte range `[start, end)`.
    pub fn tokens_in(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        let mut hit = self.spans.iter().enumerate().filter(|(_, &(s, e))| s < end && start < e);
        let first = hit.next()?.0;
        let last = hit.last().map_or(first, |(i, _)| i);
        Some((first, last))
    }
}

fn display_lemma(t: &Token) -> String {
    if t.upos == "PROPN" {
        t.lemma.clone()
    } else {
        t.lemma.to_lowercase()
    }
}

pub fn serialize(s: &Sentence) -> Serialized {
    let mut text = String::new();
    let mut spans = Vec::with_capacity(s.tokens.len());
    for t in &s.tokens {
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(&display_lemma(t));
        text.push('/');
        text.push_str(&t.deprel);
        spans.push((start, text.len()));
    }
    Serialized { text, spans }
}

/// `lemma/deprel` items joined by spaces; lemmas are lowercased except for
/// proper nouns.
pub fn serialize_tokens(s: &Sentence) -> String {
    serialize(s).text
}

#[derive(Default)]
struct Block {
    uid: Option<String>,
    field: Option<SourceField>,
    text: Option<String>,
    tokens: Vec<Token>,
    start_line: usize,
}

impl Block {
    fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.uid.is_none() && self.text.is_none()
    }

    fn finish(self, ordinal: usize) -> Sentence {
        let (uid, field) = match self.uid {
            Some(id) => match id.rsplit_once('/') {
                Some((uid, field)) if field.parse::<SourceField>().is_ok() => {
                    (uid.to_string(), field.parse().ok())
                }
                _ => (id, None),
            },
            None => (format!("s{ordinal}"), None),
        };
        Sentence {
            uid,
            source_field: self.field.or(field).unwrap_or_default(),
            tokens: self.tokens,
            text: self.text,
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_comment(block: &mut Block, body: &str, line: usize) -> Result<()> {
    let Some((key, value)) = body.split_once('=') else {
        return Ok(());
    };
    let value = value.trim().to_string();
    match key.trim() {
        "sent_id" => block.uid = Some(value),
        "text" => block.text = Some(value),
        "field" => {
            block.field = Some(value.parse().map_err(|e: String| parse_error(line, e))?)
        }
        _ => {}
    }
    Ok(())
}

fn parse_token(line: &str, lineno: usize, expected: u32) -> Result<Option<Token>> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(parse_error(lineno, format!("expected 10 columns, found {}", cols.len())));
    }
    let id = cols[0];
    if let Some((a, b)) = id.split_once('-').or_else(|| id.split_once('.')) {
        // multiword token ranges and empty nodes
        if a.parse::<u32>().is_err() || b.parse::<u32>().is_err() {
            return Err(parse_error(lineno, format!("non-numeric ID `{id}`")));
        }
        return Ok(None);
    }
    let index: u32 =
        id.parse().map_err(|_| parse_error(lineno, format!("non-numeric ID `{id}`")))?;
    if index != expected {
        return Err(parse_error(lineno, format!("expected token ID {expected}, found {index}")));
    }
    let head: u32 = cols[6]
        .parse()
        .map_err(|_| parse_error(lineno, format!("non-numeric HEAD `{}`", cols[6])))?;
    let deprel = cols[7];
    if deprel.is_empty() {
        return Err(parse_error(lineno, "empty DEPREL"));
    }
    let lemma = if cols[2] == "_" && cols[1] != "_" { cols[1] } else { cols[2] };
    Ok(Some(Token {
        index,
        surface: cols[1].to_string(),
        lemma: lemma.to_string(),
        upos: cols[3].to_string(),
        deprel: deprel.to_string(),
        head,
    }))
}

/// Sentences read from a stream plus the errors of blocks that were skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub sentences: Vec<Sentence>,
    /// One [`Error::Parse`] per malformed block.
    pub errors: Vec<Error>,
}

fn parse_blocks<R: BufRead>(input: R, lenient: bool) -> Result<ParseReport> {
    let mut report = ParseReport::default();
    let mut block = Block::default();
    let mut blocks = 0usize;
    let mut poisoned = false;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if poisoned || !block.is_empty() {
                blocks += 1;
                let done = std::mem::take(&mut block);
                if !poisoned {
                    report.sentences.push(done.finish(blocks));
                }
                poisoned = false;
            }
            continue;
        }
        if poisoned {
            continue;
        }
        if block.is_empty() {
            block.start_line = lineno;
        }
        let step = match line.strip_prefix('#') {
            Some(body) => parse_comment(&mut block, body, lineno),
            None => {
                let expected = block.tokens.len() as u32 + 1;
                parse_token(line, lineno, expected).map(|tok| block.tokens.extend(tok))
            }
        };
        if let Err(e) = step {
            if !lenient {
                return Err(e);
            }
            report.errors.push(e);
            poisoned = true;
        }
    }
    if !poisoned && !block.is_empty() {
        report.sentences.push(block.finish(blocks + 1));
    }
    Ok(report)
}

/// Parses every sentence block of a CoNLL-U stream; the first malformed
/// line fails the whole parse.
pub fn parse_conllu<R: BufRead>(input: R) -> Result<Vec<Sentence>> {
    parse_blocks(input, false).map(|r| r.sentences)
}

/// Like [`parse_conllu`], but a malformed block is skipped and its error
/// recorded. Only I/O errors fail.
pub fn parse_conllu_lenient<R: BufRead>(input: R) -> Result<ParseReport> {
    parse_blocks(input, true)
}

pub fn parse_conllu_str(input: &str) -> Result<Vec<Sentence>> {
    parse_conllu(input.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const YIDDISH: &str = "\
# sent_id = ex1/premise
# text = The Yiddish culture has survived for more than a thousand years.
1\tThe\tthe\tDET\tDT\t_\t3\tdet\t_\t_
2\tYiddish\tYiddish\tADJ\tJJ\t_\t3\tamod\t_\t_
3\tculture\tculture\tNOUN\tNN\t_\t5\tnsubj\t_\t_
4\thas\thave\tAUX\tVBZ\t_\t5\taux\t_\t_
5\tsurvived\tsurvive\tVERB\tVBN\t_\t0\troot\t_\t_
6\tfor\tfor\tADP\tIN\t_\t11\tcase\t_\t_
7\tmore\tmore\tADJ\tJJR\t_\t10\tadvmod\t_\t_
8\tthan\tthan\tADP\tIN\t_\t7\tfixed\t_\t_
9\ta\ta\tDET\tDT\t_\t10\tdet\t_\t_
10\tthousand\tthousand\tNUM\tCD\t_\t11\tnummod\t_\t_
11\tyears\tyear\tNOUN\tNNS\t_\t5\tobl\t_\t_
12\t.\t.\tPUNCT\t.\t_\t5\tpunct\t_\t_
";

    #[test]
    fn two_token_block() {
        let src = "1\tDogs\tdog\tNOUN\tNNS\t_\t2\tnsubj\t_\t_\n2\trun\trun\tVERB\tVBP\t_\t0\troot\t_\t_\n";
        let s = parse_conllu_str(src).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens.len(), 2);
        assert_eq!(s[0].uid, "s1");
        assert_eq!(s[0].source_field, SourceField::Plain);
        assert_eq!(serialize_tokens(&s[0]), "dog/nsubj run/root");
    }

    #[test]
    fn empty_input() {
        assert!(parse_conllu_str("").unwrap().is_empty());
        assert!(parse_conllu_str("\n\n").unwrap().is_empty());
    }

    #[test]
    fn example_sentence_serialization() {
        let s = parse_conllu_str(YIDDISH).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens.len(), 12);
        assert_eq!(s[0].uid, "ex1");
        assert_eq!(s[0].source_field, SourceField::Premise);
        assert_eq!(
            serialize_tokens(&s[0]),
            "the/det yiddish/amod culture/nsubj have/aux survive/root for/case more/advmod \
             than/fixed a/det thousand/nummod year/obl ./punct"
        );
    }

    #[test]
    fn serialization_edge_cases() {
        assert_eq!(serialize_tokens(&Sentence::default()), "");
        let s = Sentence {
            tokens: vec![Token {
                index: 1,
                surface: "Dog".into(),
                lemma: "dog".into(),
                upos: "NOUN".into(),
                deprel: "root".into(),
                head: 0,
            }],
            ..Sentence::default()
        };
        assert_eq!(serialize_tokens(&s), "dog/root");
        let mut p = s.clone();
        p.tokens[0].lemma = "Africa".into();
        p.tokens[0].upos = "PROPN".into();
        assert_eq!(serialize_tokens(&p), "Africa/root");
    }

    #[test]
    fn ranges_and_empty_nodes_are_skipped() {
        let src = "\
# sent_id = 3
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_
1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_
2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_
3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_
";
        let s = parse_conllu_str(src).unwrap();
        assert_eq!(s[0].uid, "3");
        assert_eq!(serialize_tokens(&s[0]), "do/aux not/advmod go/root");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let src = "# c\n1\tDogs\tdog\tNOUN\n";
        assert_eq!(
            parse_conllu_str(src).unwrap_err(),
            Error::Parse { line: 2, message: "expected 10 columns, found 4".into() }
        );
        let src = "x\tDogs\tdog\tNOUN\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse_conllu_str(src), Err(Error::Parse { line: 1, .. })));
        let src = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n3\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(matches!(parse_conllu_str(src), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn field_comment_and_multiple_blocks() {
        let src = "\
# sent_id = a/b/hypothesis
1\tx\tx\tX\t_\t_\t0\troot\t_\t_

# sent_id = q7
# field = question
1\ty\ty\tX\t_\t_\t0\troot\t_\t_
";
        let s = parse_conllu_str(src).unwrap();
        assert_eq!((s[0].uid.as_str(), s[0].source_field), ("a/b", SourceField::Hypothesis));
        assert_eq!((s[1].uid.as_str(), s[1].source_field), ("q7", SourceField::Question));
    }

    #[test]
    fn lenient_parsing_skips_bad_blocks() {
        let src = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n1\tb\tb\tX\t_\t_\tx\troot\t_\t_\n2\tc\n\n1\td\td\tX\t_\t_\t0\troot\t_\t_\n";
        let r = parse_conllu_lenient(src.as_bytes()).unwrap();
        assert_eq!(r.sentences.iter().map(|s| s.uid.as_str()).collect::<Vec<_>>(), vec!["s1", "s3"]);
        assert_eq!(r.errors, vec![Error::Parse { line: 3, message: "non-numeric HEAD `x`".into() }]);
        assert!(parse_conllu_str(src).is_err());
    }

    #[test]
    fn token_span_lookup() {
        let s = parse_conllu_str(YIDDISH).unwrap();
        let ser = serialize(&s[0]);
        let start = ser.text.find("more/").unwrap();
        let end = ser.text.find("year/obl").unwrap() + "year/obl".len();
        assert_eq!(ser.tokens_in(start, end), Some((6, 10)));
        assert_eq!(ser.tokens_in(ser.text.len(), ser.text.len() + 1), None);
    }
}

//! Numerals as they appear in detected quantifier spans.

use serde::{Deserialize, Serialize};

/// A parsed numeral. Plain counts and percentages carry only `k`; ratios
/// such as `20/20` or `two thirds` carry the numerator in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Numeral {
    pub k: u64,
    pub p: Option<u64>,
}

impl Numeral {
    pub fn count(k: u64) -> Self {
        Numeral { k, p: None }
    }

    pub fn ratio(p: u64, k: u64) -> Self {
        Numeral { k, p: Some(p) }
    }
}

fn small(word: &str) -> Option<u64> {
    const UNITS: [&str; 20] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
        "nineteen",
    ];
    const TENS: [&str; 8] =
        ["twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];
    if let Some(i) = UNITS.iter().position(|&u| u == word) {
        return Some(i as u64);
    }
    TENS.iter().position(|&t| t == word).map(|i| (i as u64 + 2) * 10)
}

fn scale(word: &str) -> Option<u64> {
    match word {
        "thousand" | "thousands" => Some(1_000),
        "million" | "millions" => Some(1_000_000),
        "billion" | "billions" => Some(1_000_000_000),
        _ => None,
    }
}

/// Denominators of fraction words.
pub fn fraction_word(word: &str) -> Option<u64> {
    match word.trim_end_matches('s') {
        "half" | "halve" => Some(2),
        "third" => Some(3),
        "quarter" | "fourth" => Some(4),
        "fifth" => Some(5),
        "sixth" => Some(6),
        "seventh" => Some(7),
        "eighth" => Some(8),
        "ninth" => Some(9),
        "tenth" => Some(10),
        _ => None,
    }
}

fn digits(s: &str) -> Option<u64> {
    let s = s.trim();
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit() || c == ',') {
        return None;
    }
    s.replace(',', "").parse().ok()
}

fn words(s: &str) -> Option<u64> {
    let mut total: u64 = 0;
    let mut current: u64 = 0;
    let mut any = false;
    for (i, w) in s.split(|c: char| c.is_whitespace() || c == '-').filter(|w| !w.is_empty()).enumerate() {
        if let Some(v) = digits(w).or_else(|| small(w)) {
            current = current.checked_add(v)?;
        } else if (w == "a" || w == "an") && i == 0 {
            current = 1;
        } else if w == "and" && any {
            continue;
        } else if w == "hundred" || w == "hundreds" {
            current = current.max(1).checked_mul(100)?;
        } else if let Some(m) = scale(w) {
            total = total.checked_add(current.max(1).checked_mul(m)?)?;
            current = 0;
        } else {
            return None;
        }
        any = true;
    }
    any.then(|| total.checked_add(current)).flatten()
}

/// Parses digits (`4`, `1,000`), percentages (`9%`), slash ratios (`20/20`),
/// English number words up to billions (`a thousand`, `two hundred`) and
/// fraction phrases (`half`, `two thirds`).
pub fn parse_numeral(raw: &str) -> Option<Numeral> {
    let s = raw.trim().to_lowercase();
    if s.is_empty() {
        return None;
    }
    if let Some(num) = s.strip_suffix('%').or_else(|| s.strip_suffix(" percent")) {
        return parse_numeral(num).filter(|n| n.p.is_none());
    }
    if let Some((p, k)) = s.split_once('/') {
        return Some(Numeral::ratio(digits(p)?, digits(k)?));
    }
    let (head, last) = match s.rsplit_once(char::is_whitespace) {
        Some((h, l)) => (h.trim(), l),
        None => ("", s.as_str()),
    };
    if let Some(den) = fraction_word(last) {
        let p = if head.is_empty() { 1 } else { words(head)? };
        return Some(Numeral::ratio(p, den));
    }
    words(&s).map(Numeral::count)
}

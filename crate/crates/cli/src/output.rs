use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::{data, Outcome};

#[derive(Debug, Serialize)]
pub struct RejectRecord {
    pub file: String,
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uid: Option<String>,
    pub reason: String,
}

impl RejectRecord {
    pub fn new(file: &Path, line: usize, uid: Option<String>, reason: impl Into<String>) -> Self {
        RejectRecord { file: file.display().to_string(), line, uid, reason: reason.into() }
    }
}

fn sidecar(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".rejects.jsonl");
    output.with_file_name(name)
}

pub fn jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> Outcome<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).map_err(data)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(data)?;
    s.push('\n');
    Ok(s)
}

/// Writes the main output and the rejects, and reports the reject count.
pub fn finish(output: Option<&Path>, body: &str, rejects: &[RejectRecord]) -> Outcome<()> {
    let rejects_body = jsonl(rejects)?;
    match output {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display())).map_err(data)?;
            let side = sidecar(path);
            fs::write(&side, &rejects_body)
                .with_context(|| format!("writing {}", side.display()))
                .map_err(data)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(data)?;
            out.flush().map_err(data)?;
            eprint!("{rejects_body}");
        }
    }
    if !rejects.is_empty() {
        eprintln!("{} record(s) rejected", rejects.len());
    }
    Ok(())
}

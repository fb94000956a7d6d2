//! `gqkit`: quantifier detection, corpus statistics, entailment labeling,
//! item generation and evaluation over files.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors. Bad
//! records inside an input never abort a run; they go to a rejects sidecar
//! (`<output>.rejects.jsonl`, or stderr without `--output`).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gqkit", version, about = "Generalized-quantifier toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Find quantifiers in CoNLL-U files; one JSON record per match.
    Detect,
    /// Per-category counts and a rank-frequency table.
    Stats,
    /// Label formula pairs (JSONL) with the bounded oracle.
    Label,
    /// Generate labeled premise/hypothesis items from templates.
    Generate,
    /// Accuracy by quantifier category and by premise/hypothesis pair.
    Evaluate,
    /// Fleiss' kappa of a CSV count matrix (items × categories).
    Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
    Jsonl,
}

#[derive(Debug, Args)]
struct Options {
    /// Input file; repeat for several.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value = "premise")]
    premise_field: String,
    #[arg(long, global = true, default_value = "hypothesis")]
    hypothesis_field: String,
    #[arg(long, global = true, default_value = "label")]
    label_field: String,
    /// Key of the model prediction in evaluation files.
    #[arg(long, global = true, default_value = "prediction")]
    prediction_field: String,
    /// Key of the record id in pair files.
    #[arg(long, global = true, default_value = "uid")]
    uid_field: String,
    /// CoNLL-U annotations for JSONL pair files; one file, or one per input.
    #[arg(long, global = true)]
    annotations: Vec<PathBuf>,
    /// Field counted by `stats`.
    #[arg(long, global = true, default_value = "hypothesis")]
    field: String,
    /// Pattern file (defaults to the built-in patterns).
    #[arg(long, global = true)]
    patterns: Option<PathBuf>,
    /// Negation cue list (defaults to the built-in list).
    #[arg(long, global = true)]
    cues: Option<PathBuf>,
    /// Universe bound for the oracle.
    #[arg(long, global = true, default_value_t = 24,
          value_parser = clap::value_parser!(u32).range(1..))]
    max_universe: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Template file (defaults to the built-in templates).
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 30,
          value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Allowed relative deviation of each label count from uniform; negative disables.
    #[arg(long, global = true, default_value_t = 0.1, allow_negative_numbers = true)]
    balance: f64,
    /// Substituted variants per generated item.
    #[arg(long, global = true, default_value_t = 0)]
    augment: usize,
}

/// How a run failed, which decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

pub type Outcome<T> = Result<T, Failure>;

pub fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

pub fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command, &cli.opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

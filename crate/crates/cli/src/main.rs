//! `llaca` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use llaca::llm::FilterScope;
use llaca::ErrorClass;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "llaca",
    version,
    about = "Word segmentation from sampled segmentations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with paths, model client and filter settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Ask the model (or a fixture) to segment the raw corpus; write accepted lines and an audit file.
    Sample,
    /// Count sampled lines, filter by PMI against the raw corpus, write a vocabulary TSV.
    Vocab,
    /// Compile a vocabulary TSV into an automaton and print its size.
    Build,
    /// Segment raw text with a vocabulary.
    Segment,
    /// Score a segmented file against gold.
    Eval,
    /// Corpus perplexity of raw text under a vocabulary.
    Ppl,
    /// Repeat sample, filter and decode; print one report line per iteration and decoder.
    Iterate,
}

/// Flags that override the config file.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// Raw corpus, one sentence per line.
    #[arg(long, global = true)]
    raw: Option<PathBuf>,
    /// Gold corpus, space-separated tokens.
    #[arg(long, global = true)]
    gold: Option<PathBuf>,
    /// Vocabulary TSV.
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Command input; `vocab` accepts several sampled-line files.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,
    /// Command output; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Replay model answers from this fixture instead of calling the endpoint.
    #[arg(long, global = true)]
    fixture: Option<PathBuf>,
    /// Save every model answer to this fixture file.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Per-sentence accept/reject log written by `sample`.
    #[arg(long, global = true)]
    audit: Option<PathBuf>,
    /// Mismatched sentences written by `eval`.
    #[arg(long, global = true)]
    mismatches: Option<PathBuf>,
    /// llaca, uni, fmm or bmm.
    #[arg(long, global = true)]
    decoder: Option<String>,
    /// Fraction of candidate words kept by the PMI filter, in (0, 1] [default: 0.99].
    #[arg(long, global = true)]
    top_ratio: Option<f64>,
    /// Seeds the batch shuffle [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rounds run by `iterate` [default: 1].
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Apply the PMI filter to the pooled samples or to each batch.
    #[arg(long, global = true, value_parser = parse_scope)]
    filter_scope: Option<FilterScope>,
    /// Keep runs of ASCII letters together as single tokens.
    #[arg(long, global = true)]
    latin: bool,
}

fn parse_scope(s: &str) -> Result<FilterScope, String> {
    s.parse().map_err(|e: llaca::Error| e.to_string())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 1,
        ErrorClass::Data => 2,
        ErrorClass::Upstream => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = RunConfig::load(cli.config.as_deref(), &cli.overrides)
        .and_then(|cfg| commands::run(cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}

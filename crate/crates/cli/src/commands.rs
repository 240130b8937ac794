use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use llaca::corpus::load_raw;
use llaca::llm::{self, ChatClient, Fixture, Recorder, SampleRun, SegmentationSource};
use llaca::pipeline::{self, IterateConfig, REPORT_HEADER};
use llaca::{
    load_gold, strip_gold, token_prf, Automaton, Error, GoldCorpus, RawCorpus, Result, Segmenter,
    SuffixIndex, Vocabulary,
};

use crate::config::RunConfig;
use crate::Command;

pub fn run(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Sample => sample(cfg),
        Command::Vocab => vocab(cfg),
        Command::Build => build(cfg),
        Command::Segment => segment(cfg),
        Command::Eval => eval(cfg),
        Command::Ppl => ppl(cfg),
        Command::Iterate => iterate(cfg),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_owned(),
        source: e,
    }
}

/// Writes to `path`, or to standard output when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn joined(sentences: &[Vec<String>]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "{}", s.join(" "));
    }
    out
}

/// The raw text to operate on: the first `--input`, else `--raw`.
fn text_input(cfg: &RunConfig) -> Result<RawCorpus> {
    match cfg.input.first() {
        Some(p) => load_raw(p),
        None => load_raw(cfg.need(&cfg.raw, "raw")?),
    }
}

fn load_segmenter(cfg: &RunConfig) -> Result<Segmenter> {
    let v = Vocabulary::load_tsv(cfg.need(&cfg.vocab, "vocab")?)?;
    Ok(Segmenter::new(&v).with_rules(cfg.rules))
}

/// Runs `f` against the fixture or the live endpoint, recording answers when asked.
fn with_source<T>(
    cfg: &RunConfig,
    f: impl FnOnce(&dyn SegmentationSource) -> Result<T>,
) -> Result<T> {
    let base: Box<dyn SegmentationSource> = match &cfg.fixture {
        Some(p) => Box::new(Fixture::load(p)?),
        None => Box::new(ChatClient::new(cfg.client.clone())?),
    };
    match &cfg.record {
        Some(path) => {
            let recorder = Recorder::new(base.as_ref());
            let out = f(&recorder);
            recorder.fixture().save(path)?;
            out
        }
        None => f(base.as_ref()),
    }
}

fn audit_text(run: &SampleRun, len: usize) -> String {
    let mut rows = vec![None; len];
    for b in &run.batches {
        let failed = b.failure.is_some();
        for (pos, &i) in b.indices.iter().enumerate() {
            let status = if failed {
                "failed"
            } else if b.parsed.accepted_positions.contains(&pos) {
                "accepted"
            } else {
                "rejected"
            };
            rows[i] = Some((status, b.lines[pos].as_str()));
        }
    }
    let mut out = String::new();
    for (i, row) in rows.into_iter().enumerate() {
        let (status, line) = row.expect("every sentence is in one batch");
        let _ = writeln!(out, "{i}\t{status}\t{line}");
    }
    out
}

fn sample(cfg: &RunConfig) -> Result<()> {
    let raw = load_raw(cfg.need(&cfg.raw, "raw")?)?;
    let run = with_source(cfg, |src| {
        llm::sample(src, &raw, cfg.client.seed, cfg.client.concurrency)
    })?;
    if run.failed_batches() == run.batches.len() {
        return Err(Error::Upstream("every batch failed".into()));
    }
    let accepted: Vec<Vec<String>> = run.accepted().into_iter().map(|(_, t)| t).collect();
    emit(cfg.output.as_deref(), &joined(&accepted))?;

    let audit = cfg.audit.clone().or_else(|| {
        cfg.output.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".audit.tsv");
            PathBuf::from(p)
        })
    });
    if let Some(path) = audit {
        emit(Some(&path), &audit_text(&run, raw.len()))?;
    }
    let rejected = run.rejected_count();
    eprintln!(
        "accepted={} rejected={} ({:.1}%) failed_batches={}",
        run.accepted_count(),
        rejected,
        100.0 * rejected as f64 / raw.len() as f64,
        run.failed_batches()
    );
    Ok(())
}

fn vocab(cfg: &RunConfig) -> Result<()> {
    let raw = load_raw(cfg.need(&cfg.raw, "raw")?)?;
    if cfg.input.is_empty() {
        return Err(Error::Config("missing --input with sampled lines".into()));
    }
    let mut counts = Vocabulary::new();
    for path in &cfg.input {
        let sampled = load_gold(path)?;
        counts = llaca::merge(&counts, &llaca::count_words(&sampled.sentences));
    }
    if counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let v = llaca::pmi_filter(&counts, &SuffixIndex::build(&raw), cfg.top_ratio)?;
    log::info!("kept {} of {} words", v.len(), counts.len());
    emit(cfg.output.as_deref(), &v.to_tsv())
}

fn build(cfg: &RunConfig) -> Result<()> {
    let path = cfg.need(&cfg.vocab, "vocab")?;
    let started = Instant::now();
    let v = Vocabulary::load_tsv(path)?;
    let a = Automaton::build(&v);
    println!(
        "words={} nodes={} total_count={} elapsed_ms={}",
        a.word_count(),
        a.node_count(),
        a.total_count(),
        started.elapsed().as_millis()
    );
    Ok(())
}

fn segment(cfg: &RunConfig) -> Result<()> {
    let s = load_segmenter(cfg)?;
    let raw = text_input(cfg)?;
    let out = pipeline::segment_corpus(&s, &raw, cfg.decoder);
    emit(cfg.output.as_deref(), &joined(&out.sentences))
}

fn eval(cfg: &RunConfig) -> Result<()> {
    let gold = load_gold(cfg.need(&cfg.gold, "gold")?)?;
    let pred_path = cfg
        .input
        .first()
        .ok_or_else(|| Error::Config("missing --input with the segmented file".into()))?;
    let report = token_prf(&gold, &load_gold(pred_path)?)?;
    if let Some(p) = &cfg.mismatches {
        report.write_mismatches(p)?;
    }
    emit(cfg.output.as_deref(), &format!("{report}\n"))
}

fn ppl(cfg: &RunConfig) -> Result<()> {
    let s = load_segmenter(cfg)?;
    let raw = text_input(cfg)?;
    let ppl = pipeline::perplexity(&s, &raw, cfg.decoder)?;
    emit(cfg.output.as_deref(), &format!("ppl={ppl:.4}\n"))
}

fn iterate(cfg: &RunConfig) -> Result<()> {
    let gold: GoldCorpus = load_gold(cfg.need(&cfg.gold, "gold")?)?;
    let raw = match &cfg.raw {
        Some(p) => load_raw(p)?,
        None => strip_gold(&gold),
    };
    let mut report_file = match &cfg.output {
        Some(p) => Some((
            BufWriter::new(File::create(p).map_err(io_err(p))?),
            p.as_path(),
        )),
        None => None,
    };
    let mut write_line = |line: &str| -> Result<()> {
        println!("{line}");
        if let Some((w, p)) = &mut report_file {
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(io_err(p))?;
        }
        Ok(())
    };
    write_line(REPORT_HEADER)?;

    let it = IterateConfig {
        seed: cfg.client.seed,
        iterations: cfg.iterations,
        top_ratio: cfg.top_ratio,
        scope: cfg.scope,
        concurrency: cfg.client.concurrency,
        rules: cfg.rules,
    };
    let mut write_error = None;
    let result = with_source(cfg, |src| {
        pipeline::iterate(src, &raw, &gold, &it, &mut |r| {
            if let Err(e) = write_line(&r.to_string()) {
                write_error.get_or_insert(e);
            }
        })
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    let v = result?;
    if let Some(p) = &cfg.vocab {
        v.save_tsv(p)?;
    }
    Ok(())
}

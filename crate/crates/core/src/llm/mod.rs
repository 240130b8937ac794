//! Sampling segmentations from a chat model.
//!
//! Sentences are shuffled into batches of about `sqrt(K)` sentences, each
//! batch is sent as one prompt, and every returned line is validated against
//! its input before it may contribute counts. A [`Fixture`] can stand in for
//! the network so runs are reproducible.

mod chat;
mod fixture;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub use chat::ChatClient;
pub use fixture::{Fixture, Recorder};

use crate::corpus::RawCorpus;
use crate::error::{Error, Result};
use crate::suffix_index::SuffixIndex;
use crate::vocab::{count_words, merge, parse_llm_lines, pmi_filter, ParsedLines, Vocabulary};

pub const TEXT_SLOT: &str = "{TEXT}";

pub const DEFAULT_PROMPT: &str =
    "Segment the following text into words. Separate words with single spaces. \
Output one line per input line, with no explanations. {TEXT}";

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_ENV: &str = "LLACA_API_KEY";

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    /// Prompt with exactly one `{TEXT}` slot.
    pub prompt_template: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Delay before the first retry; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Batch requests allowed in flight at once.
    pub concurrency: usize,
    /// Seeds the batch shuffle.
    pub seed: u64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            prompt_template: DEFAULT_PROMPT.into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 120,
            backoff_ms: 500,
            concurrency: 4,
            seed: 0,
            api_key: None,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prompt_template.matches(TEXT_SLOT).count() != 1 {
            return Err(Error::Config(format!(
                "prompt template must contain exactly one {TEXT_SLOT} slot"
            )));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::Config("temperature must be non-negative".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_env_api_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn render_prompt<S: AsRef<str>>(&self, batch: &[S]) -> String {
        let text: Vec<&str> = batch.iter().map(AsRef::as_ref).collect();
        self.prompt_template
            .replacen(TEXT_SLOT, &text.join("\n"), 1)
    }
}

/// A partition of sentence indices into batches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<Vec<usize>>,
}

impl BatchPlan {
    pub fn batch_size(sentences: usize) -> usize {
        let mut b = (sentences as f64).sqrt() as usize;
        while b * b < sentences {
            b += 1;
        }
        b.max(1)
    }
}

/// Shuffles `0..k` with a seeded generator and cuts it into runs of `ceil(sqrt(k))`.
pub fn make_batches(k: usize, seed: u64) -> BatchPlan {
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let size = BatchPlan::batch_size(k);
    BatchPlan {
        batches: order.chunks(size).map(<[usize]>::to_vec).collect(),
    }
}

/// The request failed after all retries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchFailure(pub String);

/// Anything that can segment a batch of sentences, one output line per input.
pub trait SegmentationSource: Sync {
    fn segment_batch(&self, batch: &[&str]) -> std::result::Result<Vec<String>, BatchFailure>;
}

impl<T: SegmentationSource + ?Sized> SegmentationSource for &T {
    fn segment_batch(&self, batch: &[&str]) -> std::result::Result<Vec<String>, BatchFailure> {
        (**self).segment_batch(batch)
    }
}

#[derive(Clone, Debug)]
pub struct BatchOutcome {
    /// Corpus indices of the batch's sentences, in prompt order.
    pub indices: Vec<usize>,
    /// Raw output lines, padded with empty lines to the batch length.
    pub lines: Vec<String>,
    pub parsed: ParsedLines,
    pub failure: Option<BatchFailure>,
}

#[derive(Clone, Debug, Default)]
pub struct SampleRun {
    pub batches: Vec<BatchOutcome>,
}

impl SampleRun {
    /// Accepted token lists keyed by corpus index, sorted by index.
    pub fn accepted(&self) -> Vec<(usize, Vec<String>)> {
        let mut out: Vec<(usize, Vec<String>)> = self
            .batches
            .iter()
            .flat_map(|b| {
                b.parsed
                    .accepted_positions
                    .iter()
                    .zip(&b.parsed.accepted)
                    .map(|(&p, t)| (b.indices[p], t.clone()))
            })
            .collect();
        out.sort_by_key(|(i, _)| *i);
        out
    }

    pub fn accepted_count(&self) -> usize {
        self.batches.iter().map(|b| b.parsed.accepted.len()).sum()
    }

    pub fn rejected_count(&self) -> usize {
        self.batches.iter().map(|b| b.parsed.rejected_count()).sum()
    }

    pub fn failed_batches(&self) -> usize {
        self.batches.iter().filter(|b| b.failure.is_some()).count()
    }

    /// Raw counts over every accepted line.
    pub fn counts(&self) -> Vocabulary {
        let lists: Vec<&[String]> = self
            .batches
            .iter()
            .flat_map(|b| b.parsed.accepted.iter().map(Vec::as_slice))
            .collect();
        count_words(&lists)
    }
}

/// Runs one sampling pass: plan, request, validate.
pub fn sample(
    source: &dyn SegmentationSource,
    corpus: &RawCorpus,
    seed: u64,
    concurrency: usize,
) -> Result<SampleRun> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput(format!(
            "corpus {:?} has no sentences",
            corpus.id
        )));
    }
    let plan = make_batches(corpus.len(), seed);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BatchOutcome>>> = Mutex::new(vec![None; plan.batches.len()]);
    let workers = concurrency.clamp(1, plan.batches.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::Relaxed);
                let Some(indices) = plan.batches.get(b) else {
                    break;
                };
                let outcome = run_batch(source, corpus, indices);
                log::info!(
                    "batch {}/{}: {} accepted, {} rejected{}",
                    b + 1,
                    plan.batches.len(),
                    outcome.parsed.accepted.len(),
                    outcome.parsed.rejected_count(),
                    outcome
                        .failure
                        .as_ref()
                        .map_or(String::new(), |f| format!(" (failed: {})", f.0)),
                );
                slots.lock().expect("batch slots poisoned")[b] = Some(outcome);
            });
        }
    });

    let batches = slots
        .into_inner()
        .expect("batch slots poisoned")
        .into_iter()
        .map(|o| o.expect("every batch ran"))
        .collect();
    Ok(SampleRun { batches })
}

fn run_batch(
    source: &dyn SegmentationSource,
    corpus: &RawCorpus,
    indices: &[usize],
) -> BatchOutcome {
    let sentences: Vec<&str> = indices
        .iter()
        .map(|&i| corpus.sentences[i].as_str())
        .collect();
    let (mut lines, failure) = match source.segment_batch(&sentences) {
        Ok(lines) => (lines, None),
        Err(f) => (Vec::new(), Some(f)),
    };
    lines.resize(sentences.len(), String::new());
    let parsed = parse_llm_lines(&sentences, &lines);
    BatchOutcome {
        indices: indices.to_vec(),
        lines,
        parsed,
        failure,
    }
}

/// Where the top-ratio filter is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterScope {
    /// Pool every batch of the pass, then filter once.
    #[default]
    Pooled,
    /// Filter each batch on its own, then merge.
    Batch,
}

impl std::str::FromStr for FilterScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(FilterScope::Pooled),
            "batch" => Ok(FilterScope::Batch),
            _ => Err(Error::Config(format!("unknown filter scope {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WsOptions {
    pub seed: u64,
    pub concurrency: usize,
    pub top_ratio: f64,
    pub scope: FilterScope,
}

impl WsOptions {
    pub fn from_client(cfg: &ClientConfig, top_ratio: f64) -> Self {
        WsOptions {
            seed: cfg.seed,
            concurrency: cfg.concurrency,
            top_ratio,
            scope: FilterScope::Pooled,
        }
    }
}

impl Default for WsOptions {
    fn default() -> Self {
        WsOptions {
            seed: 0,
            concurrency: 4,
            top_ratio: crate::vocab::DEFAULT_TOP_RATIO,
            scope: FilterScope::Pooled,
        }
    }
}

/// Counts and filters the accepted lines of a finished sampling pass.
pub fn vocabulary_from_run(
    run: &SampleRun,
    index: &SuffixIndex,
    top_ratio: f64,
    scope: FilterScope,
) -> Result<Vocabulary> {
    if !run.batches.is_empty() && run.failed_batches() == run.batches.len() {
        let reason = run.batches[0].failure.as_ref().map_or("", |f| f.0.as_str());
        return Err(Error::Upstream(format!(
            "every batch failed; first error: {reason}"
        )));
    }
    if run.accepted_count() == 0 {
        return Err(Error::EmptyVocabulary);
    }
    match scope {
        FilterScope::Pooled => pmi_filter(&run.counts(), index, top_ratio),
        FilterScope::Batch => run.batches.iter().try_fold(Vocabulary::new(), |acc, b| {
            let v = count_words(&b.parsed.accepted);
            Ok(merge(&acc, &pmi_filter(&v, index, top_ratio)?))
        }),
    }
}

/// Samples, validates, counts and filters in one go.
pub fn run_llm_ws(
    source: &dyn SegmentationSource,
    corpus: &RawCorpus,
    index: &SuffixIndex,
    opts: &WsOptions,
) -> Result<Vocabulary> {
    let run = sample(source, corpus, opts.seed, opts.concurrency)?;
    log::info!(
        "sampled {} sentences: {} accepted, {} rejected, {} failed batches",
        corpus.len(),
        run.accepted_count(),
        run.rejected_count(),
        run.failed_batches()
    );
    vocabulary_from_run(&run, index, opts.top_ratio, opts.scope)
}

#[cfg(test)]
mod tests;

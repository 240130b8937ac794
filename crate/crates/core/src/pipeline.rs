//! End-to-end helpers: segment a corpus, score it, and run repeated
//! sample-filter-decode rounds.

use std::fmt;

use crate::corpus::{GoldCorpus, RawCorpus};
use crate::error::{Error, Result};
use crate::eval::{token_prf, EvalReport};
use crate::llm::{sample, vocabulary_from_run, FilterScope, SegmentationSource};
use crate::segmenter::{corpus_ppl, Decoder, PreprocessRules, Segmenter};
use crate::suffix_index::SuffixIndex;
use crate::vocab::{merge, pmi_filter, Vocabulary, DEFAULT_TOP_RATIO};

/// Describes how rounds combine; printed above the per-round report lines.
pub const REPORT_HEADER: &str =
    "# each iteration samples a fresh batch plan (seed + iteration - 1), adds its counts to the running total, and re-filters";

pub fn segment_corpus(segmenter: &Segmenter, raw: &RawCorpus, decoder: Decoder) -> GoldCorpus {
    GoldCorpus::from_token_lists(segmenter.segment_all(&raw.sentences, decoder))
}

/// Corpus perplexity of `raw` under the segmenter's context model, using the
/// paths chosen by `decoder`.
pub fn perplexity(segmenter: &Segmenter, raw: &RawCorpus, decoder: Decoder) -> Result<f64> {
    corpus_ppl(&segmenter.score_all(&raw.sentences, decoder))
}

pub fn evaluate(
    segmenter: &Segmenter,
    raw: &RawCorpus,
    gold: &GoldCorpus,
    decoder: Decoder,
) -> Result<EvalReport> {
    token_prf(gold, &segment_corpus(segmenter, raw, decoder))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateConfig {
    pub seed: u64,
    pub iterations: usize,
    pub top_ratio: f64,
    pub scope: FilterScope,
    pub concurrency: usize,
    pub rules: PreprocessRules,
}

impl Default for IterateConfig {
    fn default() -> Self {
        IterateConfig {
            seed: 0,
            iterations: 1,
            top_ratio: DEFAULT_TOP_RATIO,
            scope: FilterScope::Pooled,
            concurrency: 4,
            rules: PreprocessRules::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub decoder: Decoder,
    pub eval: EvalReport,
    pub ppl: f64,
    pub vocab_size: usize,
}

impl fmt::Display for IterationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter={} decoder={} P={:.4} R={:.4} F={:.4} ppl={:.4} vocab={}",
            self.iteration,
            self.decoder,
            self.eval.precision,
            self.eval.recall,
            self.eval.f_measure,
            self.ppl,
            self.vocab_size
        )
    }
}

/// Runs `cfg.iterations` rounds and returns the final vocabulary.
///
/// Reports are handed to `on_report` as soon as each round finishes, so a
/// round that fails still leaves the earlier ones with the caller.
pub fn iterate(
    source: &dyn SegmentationSource,
    raw: &RawCorpus,
    gold: &GoldCorpus,
    cfg: &IterateConfig,
    on_report: &mut dyn FnMut(&IterationReport),
) -> Result<Vocabulary> {
    if cfg.iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    let index = SuffixIndex::build(raw);
    let mut counts = Vocabulary::new();
    let mut vocab = Vocabulary::new();
    for t in 1..=cfg.iterations {
        let run = sample(
            source,
            raw,
            cfg.seed.wrapping_add(t as u64 - 1),
            cfg.concurrency,
        )?;
        vocab = match cfg.scope {
            FilterScope::Pooled => {
                // surfaces the all-failed and nothing-accepted errors for this round
                if run.accepted_count() == 0 {
                    vocabulary_from_run(&run, &index, cfg.top_ratio, cfg.scope)?;
                }
                counts = merge(&counts, &run.counts());
                pmi_filter(&counts, &index, cfg.top_ratio)?
            }
            FilterScope::Batch => merge(
                &vocab,
                &vocabulary_from_run(&run, &index, cfg.top_ratio, cfg.scope)?,
            ),
        };
        let segmenter = Segmenter::new(&vocab).with_rules(cfg.rules);
        for decoder in Decoder::ALL {
            let report = IterationReport {
                iteration: t,
                decoder,
                eval: evaluate(&segmenter, raw, gold, decoder)?,
                ppl: perplexity(&segmenter, raw, decoder)?,
                vocab_size: vocab.len(),
            };
            on_report(&report);
        }
    }
    Ok(vocab)
}

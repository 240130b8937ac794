//! Unsupervised word segmentation driven by model-produced samples.
//!
//! Sampled segmentations are validated and counted into a [`Vocabulary`],
//! filtered by pointwise mutual information over a [`SuffixIndex`] of the raw
//! text, and compiled into an [`Automaton`] whose words carry
//! prefix-conditioned probabilities. [`Segmenter`] finds the best path through
//! the candidate graph of each sentence; greedy and unigram decoders are
//! provided for comparison, along with [`eval`] scoring and perplexity.

pub mod automaton;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod llm;
pub mod par;
pub mod pipeline;
pub mod segmenter;
pub mod suffix_index;
pub mod vocab;

pub use automaton::{Automaton, Match, NodeId, ROOT};
pub use corpus::{load_gold, load_raw, strip_gold, GoldCorpus, RawCorpus, Span};
pub use error::{Error, ErrorClass, Result};
pub use eval::{token_prf, EvalReport};
pub use segmenter::{
    corpus_ppl, sentence_ppl, Decoder, PreprocessRules, SegDag, Segmentation, Segmenter,
    SentenceScore,
};
pub use suffix_index::SuffixIndex;
pub use vocab::{count_words, merge, parse_llm_lines, pmi_filter, Vocabulary};

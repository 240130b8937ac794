//! Sentence decoding: the candidate graph, Viterbi search, the greedy
//! baselines, and perplexity.

mod dag;

use std::fmt;
use std::str::FromStr;

pub use dag::{build_dag, fallback_log_prob, Edge, EdgeKind, PreprocessRules, SegDag, Weighting};

use crate::automaton::Automaton;
use crate::corpus::Span;
use crate::error::{Error, Result};
use crate::par;
use crate::vocab::Vocabulary;

/// A tiling of a sentence plus the total log-probability of its edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub spans: Vec<Span>,
    pub score: f64,
}

impl Segmentation {
    /// Token strings, leaving out whitespace-only spans.
    pub fn tokens(&self, text: &[char]) -> Vec<String> {
        self.spans
            .iter()
            .map(|s| text[s.start..s.end].iter().collect::<String>())
            .filter(|t| !t.chars().all(char::is_whitespace))
            .collect()
    }

    pub fn sentence_score(&self, n: usize) -> SentenceScore {
        SentenceScore {
            log_p: self.score,
            n,
        }
    }
}

/// Path log-probability and sentence length in characters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SentenceScore {
    pub log_p: f64,
    pub n: usize,
}

/// `exp(-log_p / n)`.
pub fn sentence_ppl(score: SentenceScore) -> f64 {
    (-score.log_p / score.n as f64).exp()
}

/// Geometric mean of the sentence perplexities.
pub fn corpus_ppl(scores: &[SentenceScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput(
            "perplexity needs at least one sentence".into(),
        ));
    }
    let sum: f64 = scores.iter().map(|s| -s.log_p / s.n as f64).sum();
    Ok((sum / scores.len() as f64).exp())
}

/// Path scores closer than this are ties. Equal-probability tilings can sum
/// their terms in different orders and differ in the last bits.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Highest-scoring tiling. Ties prefer the longer last word at each position.
pub fn viterbi(dag: &SegDag) -> Result<Segmentation> {
    let n = dag.len();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut back = vec![usize::MAX; n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        for e in dag.incoming(end) {
            let from = best[e.start];
            if from == f64::NEG_INFINITY {
                continue;
            }
            let cand = from + e.log_prob;
            let tie = (cand - best[end]).abs() <= TIE_TOLERANCE;
            if (cand > best[end] && !tie) || (tie && e.start < back[end]) {
                best[end] = cand;
                back[end] = e.start;
            }
        }
    }
    if n > 0 && back[n] == usize::MAX {
        return Err(Error::Disconnected(n));
    }
    let mut spans = Vec::new();
    let mut pos = n;
    while pos > 0 {
        let start = back[pos];
        spans.push(Span::new(start, pos));
        pos = start;
    }
    spans.reverse();
    Ok(Segmentation {
        spans,
        score: best[n],
    })
}

/// Forward maximum matching: repeatedly take the longest edge leaving the cursor.
pub fn greedy_forward(dag: &SegDag) -> Segmentation {
    let n = dag.len();
    let mut longest = vec![0usize; n + 1];
    for (s, e, _) in dag.iter() {
        longest[s] = longest[s].max(e);
    }
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < n {
        let end = longest[pos].max(pos + 1);
        spans.push(Span::new(pos, end));
        pos = end;
    }
    scored(dag, spans)
}

/// Backward maximum matching: the mirror image of [`greedy_forward`].
pub fn greedy_backward(dag: &SegDag) -> Segmentation {
    let n = dag.len();
    let mut spans = Vec::new();
    let mut pos = n;
    while pos > 0 {
        let start = dag
            .incoming(pos)
            .iter()
            .map(|e| e.start)
            .min()
            .unwrap_or(pos - 1);
        spans.push(Span::new(start, pos));
        pos = start;
    }
    spans.reverse();
    scored(dag, spans)
}

fn scored(dag: &SegDag, spans: Vec<Span>) -> Segmentation {
    let score = spans
        .iter()
        .map(|s| {
            dag.edge_log_prob(s.start, s.end)
                .unwrap_or(f64::NEG_INFINITY)
        })
        .sum();
    Segmentation { spans, score }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decoder {
    /// Viterbi over context-conditioned word probabilities.
    Llaca,
    /// Viterbi over unigram word probabilities.
    Uni,
    /// Forward maximum matching.
    Fmm,
    /// Backward maximum matching.
    Bmm,
}

impl Decoder {
    pub const ALL: [Decoder; 4] = [Decoder::Llaca, Decoder::Uni, Decoder::Fmm, Decoder::Bmm];

    pub fn name(self) -> &'static str {
        match self {
            Decoder::Llaca => "llaca",
            Decoder::Uni => "uni",
            Decoder::Fmm => "fmm",
            Decoder::Bmm => "bmm",
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Decoder::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown decoder {s:?} (expected llaca, uni, fmm or bmm)"
                ))
            })
    }
}

/// A frozen automaton plus pre-processing rules; shareable across threads.
#[derive(Clone, Debug)]
pub struct Segmenter {
    automaton: Automaton,
    rules: PreprocessRules,
}

impl Segmenter {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_automaton(Automaton::build(vocab))
    }

    pub fn from_automaton(automaton: Automaton) -> Self {
        Segmenter {
            automaton,
            rules: PreprocessRules::default(),
        }
    }

    pub fn with_rules(mut self, rules: PreprocessRules) -> Self {
        self.rules = rules;
        self
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn rules(&self) -> &PreprocessRules {
        &self.rules
    }

    pub fn dag(&self, text: &[char], weighting: Weighting) -> SegDag {
        build_dag(text, &self.automaton, &self.rules, weighting)
    }

    pub fn segment_chars(&self, text: &[char], decoder: Decoder) -> Segmentation {
        decode(text, &self.automaton, &self.rules, decoder)
    }

    pub fn segment(&self, text: &str, decoder: Decoder) -> Segmentation {
        let chars: Vec<char> = text.chars().collect();
        self.segment_chars(&chars, decoder)
    }

    /// Segments and returns the tokens (whitespace dropped).
    pub fn tokenize(&self, text: &str, decoder: Decoder) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        self.segment_chars(&chars, decoder).tokens(&chars)
    }

    /// Log-probability of an arbitrary tiling under context weighting. Spans
    /// that are not edges of the graph cost one fallback per character.
    pub fn context_score(&self, text: &[char], spans: &[Span]) -> f64 {
        let dag = self.dag(text, Weighting::Context);
        let fallback = fallback_log_prob(&self.automaton);
        spans
            .iter()
            .map(|s| {
                dag.edge_log_prob(s.start, s.end)
                    .unwrap_or(fallback * s.len() as f64)
            })
            .sum()
    }

    /// Decodes every sentence, in parallel when the `parallel` feature is on.
    pub fn segment_all<S: AsRef<str> + Sync>(
        &self,
        sentences: &[S],
        decoder: Decoder,
    ) -> Vec<Vec<String>> {
        par::map(sentences, |s| self.tokenize(s.as_ref(), decoder))
    }

    pub fn segment_all_sequential<S: AsRef<str>>(
        &self,
        sentences: &[S],
        decoder: Decoder,
    ) -> Vec<Vec<String>> {
        par::map_sequential(sentences, |s| self.tokenize(s.as_ref(), decoder))
    }

    /// Decodes every sentence and scores the chosen path with context weighting.
    pub fn score_all<S: AsRef<str> + Sync>(
        &self,
        sentences: &[S],
        decoder: Decoder,
    ) -> Vec<SentenceScore> {
        par::map(sentences, |s| {
            let chars: Vec<char> = s.as_ref().chars().collect();
            let seg = self.segment_chars(&chars, decoder);
            let log_p = match decoder {
                Decoder::Llaca => seg.score,
                _ => self.context_score(&chars, &seg.spans),
            };
            SentenceScore {
                log_p,
                n: chars.len(),
            }
        })
        .into_iter()
        .filter(|s| s.n > 0)
        .collect()
    }
}

fn decode(text: &[char], a: &Automaton, rules: &PreprocessRules, decoder: Decoder) -> Segmentation {
    let weighting = match decoder {
        Decoder::Uni => Weighting::Unigram,
        _ => Weighting::Context,
    };
    let dag = build_dag(text, a, rules, weighting);
    match decoder {
        // every uncovered position gets a fallback edge, so the graph is connected
        Decoder::Llaca | Decoder::Uni => viterbi(&dag).expect("segmentation graph is connected"),
        Decoder::Fmm => greedy_forward(&dag),
        Decoder::Bmm => greedy_backward(&dag),
    }
}

fn decode_default(text: &str, a: &Automaton, decoder: Decoder) -> Segmentation {
    let chars: Vec<char> = text.chars().collect();
    decode(&chars, a, &PreprocessRules::default(), decoder)
}

pub fn segment_llaca(text: &str, a: &Automaton) -> Segmentation {
    decode_default(text, a, Decoder::Llaca)
}

pub fn segment_unigram(text: &str, a: &Automaton) -> Segmentation {
    decode_default(text, a, Decoder::Uni)
}

pub fn segment_fmm(text: &str, a: &Automaton) -> Segmentation {
    decode_default(text, a, Decoder::Fmm)
}

pub fn segment_bmm(text: &str, a: &Automaton) -> Segmentation {
    decode_default(text, a, Decoder::Bmm)
}

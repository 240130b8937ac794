use crate::automaton::Automaton;

/// Which fixed token patterns are recognized before dictionary matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PreprocessRules {
    /// ASCII digit runs, with interior `.`/`,` before a digit and a trailing `%`.
    pub numbers: bool,
    /// ASCII letter runs.
    pub latin: bool,
    /// Punctuation and whitespace as single-character hard boundaries.
    pub punctuation: bool,
}

impl Default for PreprocessRules {
    fn default() -> Self {
        PreprocessRules {
            numbers: true,
            latin: false,
            punctuation: true,
        }
    }
}

impl PreprocessRules {
    pub fn none() -> Self {
        PreprocessRules {
            numbers: false,
            latin: false,
            punctuation: false,
        }
    }

    pub fn all() -> Self {
        PreprocessRules {
            numbers: true,
            latin: true,
            punctuation: true,
        }
    }
}

/// How dictionary edges are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Count over the counts of words sharing the same prefix context.
    Context,
    /// Count over the total count.
    Unigram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Word,
    /// Number or letter run from pre-processing.
    Pattern,
    /// Single punctuation or whitespace character.
    Boundary,
    /// Unknown single character.
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub start: usize,
    pub log_prob: f64,
    pub kind: EdgeKind,
}

/// Candidate words of one sentence, grouped by end position.
#[derive(Clone, Debug)]
pub struct SegDag {
    len: usize,
    edges: Vec<Vec<Edge>>,
    hard: Vec<bool>,
}

impl SegDag {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Edges ending at `end`.
    pub fn incoming(&self, end: usize) -> &[Edge] {
        &self.edges[end]
    }

    /// Positions no edge may cross.
    pub fn is_hard_boundary(&self, pos: usize) -> bool {
        self.hard[pos]
    }

    /// All edges as `(start, end, edge)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(end, es)| es.iter().map(move |e| (e.start, end, e)))
    }

    /// Best log-probability among edges spanning exactly `start..end`.
    pub fn edge_log_prob(&self, start: usize, end: usize) -> Option<f64> {
        self.edges
            .get(end)?
            .iter()
            .filter(|e| e.start == start)
            .map(|e| e.log_prob)
            .reduce(f64::max)
    }
}

pub(crate) fn is_boundary_char(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || matches!(c,
            '\u{00A1}'..='\u{00BF}'
            | '\u{2010}'..='\u{205E}'
            | '\u{3000}'..='\u{303F}'
            | '\u{FE10}'..='\u{FE1F}'
            | '\u{FE30}'..='\u{FE4F}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}

fn number_run(text: &[char], i: usize) -> usize {
    let digit = |k: usize| k < text.len() && text[k].is_ascii_digit();
    let mut j = i;
    while digit(j) {
        j += 1;
    }
    while j + 1 < text.len() && matches!(text[j], '.' | ',') && digit(j + 1) {
        j += 1;
        while digit(j) {
            j += 1;
        }
    }
    if j < text.len() && text[j] == '%' {
        j += 1;
    }
    j
}

/// Log-probability given to characters no dictionary word covers: one count
/// out of the total plus one.
pub fn fallback_log_prob(a: &Automaton) -> f64 {
    -((a.total_count() + 1) as f64).ln()
}

/// Builds the candidate graph for `text`.
///
/// Pre-processed runs become mandatory log-prob-0 edges, punctuation and
/// whitespace become single-character hard boundaries, every dictionary
/// occurrence that respects those boundaries becomes an edge, and any
/// position still lacking a single-character edge gets a fallback one.
pub fn build_dag(
    text: &[char],
    a: &Automaton,
    rules: &PreprocessRules,
    weighting: Weighting,
) -> SegDag {
    let n = text.len();
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); n + 1];
    let mut hard = vec![false; n + 1];
    let mut locked = vec![false; n + 1];
    let mut has_single = vec![false; n];

    let mut i = 0;
    while i < n {
        let c = text[i];
        let run_end = if rules.numbers && c.is_ascii_digit() {
            number_run(text, i)
        } else if rules.latin && c.is_ascii_alphabetic() {
            i + text[i..]
                .iter()
                .take_while(|c| c.is_ascii_alphabetic())
                .count()
        } else {
            i
        };
        if run_end > i {
            edges[run_end].push(Edge {
                start: i,
                log_prob: 0.0,
                kind: EdgeKind::Pattern,
            });
            hard[i] = true;
            hard[run_end] = true;
            for k in i + 1..run_end {
                hard[k] = true;
                locked[k] = true;
            }
            has_single[i] = run_end == i + 1;
            i = run_end;
        } else {
            if rules.punctuation && is_boundary_char(c) {
                edges[i + 1].push(Edge {
                    start: i,
                    log_prob: 0.0,
                    kind: EdgeKind::Boundary,
                });
                hard[i] = true;
                hard[i + 1] = true;
                has_single[i] = true;
            }
            i += 1;
        }
    }

    // hard_before[k] = number of hard positions in [0, k)
    let mut hard_before = vec![0u32; n + 2];
    for k in 0..=n {
        hard_before[k + 1] = hard_before[k] + hard[k] as u32;
    }
    let crosses = |s: usize, e: usize| e > s + 1 && hard_before[e] - hard_before[s + 1] > 0;

    a.for_each_match(text, |m| {
        let s = m.start();
        if locked[s] || locked[m.end] || crosses(s, m.end) {
            return;
        }
        let log_prob = match weighting {
            Weighting::Context => a.log_prob_of(m.node),
            Weighting::Unigram => a.unigram_log_prob_of(m.node),
        };
        edges[m.end].push(Edge {
            start: s,
            log_prob,
            kind: EdgeKind::Word,
        });
        if m.len == 1 {
            has_single[s] = true;
        }
    });

    let fallback = fallback_log_prob(a);
    for (i, single) in has_single.iter().enumerate() {
        if !single && !locked[i] && !locked[i + 1] {
            edges[i + 1].push(Edge {
                start: i,
                log_prob: fallback,
                kind: EdgeKind::Fallback,
            });
        }
    }

    SegDag {
        len: n,
        edges,
        hard,
    }
}

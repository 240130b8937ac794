//! Counted vocabularies built from validated model output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::{write_lines, SENTINEL};
use crate::error::{Error, Result};
use crate::suffix_index::SuffixIndex;

/// Default share of multi-character candidates kept by [`pmi_filter`].
pub const DEFAULT_TOP_RATIO: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
    /// Filled in by [`pmi_filter`]; cleared by [`merge`].
    pub pmi: Option<f64>,
}

/// Word counts keyed by word. Iteration order is lexicographic, which keeps
/// serialized output stable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocabulary {
    entries: BTreeMap<String, VocabEntry>,
    total_count: u64,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` occurrences of `word`.
    ///
    /// Panics if the word is empty or contains whitespace or the sentinel.
    pub fn add(&mut self, word: &str, count: u64) {
        assert!(valid_word(word), "invalid vocabulary word {word:?}");
        if count == 0 {
            return;
        }
        self.entries
            .entry(word.to_owned())
            .and_modify(|e| {
                e.count += count;
                e.pmi = None;
            })
            .or_insert_with(|| VocabEntry {
                word: word.to_owned(),
                count,
                pmi: None,
            });
        self.total_count += count;
    }

    pub fn from_counts<'a>(counts: impl IntoIterator<Item = (&'a str, u64)>) -> Self {
        let mut v = Vocabulary::new();
        for (w, c) in counts {
            v.add(w, c);
        }
        v
    }

    pub fn get(&self, word: &str) -> Option<&VocabEntry> {
        self.entries.get(word)
    }

    pub fn count(&self, word: &str) -> u64 {
        self.entries.get(word).map_or(0, |e| e.count)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn iter(&self) -> impl Iterator<Item = &VocabEntry> {
        self.entries.values()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_lines(path.as_ref(), self.to_tsv().lines())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            out.push_str(&e.word);
            out.push('\t');
            out.push_str(&e.count.to_string());
            out.push('\n');
        }
        out
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text).map_err(|(line, message)| Error::Format {
            path: path.to_owned(),
            line,
            message,
        })
    }

    /// Parses `word<TAB>count` lines; `#` starts a comment line, duplicate
    /// words have their counts summed.
    pub fn parse_tsv(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut v = Vocabulary::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| (i + 1, "expected `word<TAB>count`".to_owned()))?;
            if !valid_word(word) {
                return Err((i + 1, format!("invalid word {word:?}")));
            }
            let count: u64 = count
                .parse()
                .map_err(|_| (i + 1, format!("invalid count {count:?}")))?;
            if count == 0 {
                return Err((i + 1, "count must be positive".to_owned()));
            }
            v.add(word, count);
        }
        Ok(v)
    }
}

fn valid_word(word: &str) -> bool {
    !word.is_empty() && !word.chars().any(|c| c.is_whitespace() || c == SENTINEL)
}

/// Result of validating one batch of model output against its input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedLines {
    /// Accepted token lists, in input order.
    pub accepted: Vec<Vec<String>>,
    /// Positions (within the batch) of the accepted lines.
    pub accepted_positions: Vec<usize>,
    /// Positions (within the batch) of rejected lines.
    pub rejected_positions: Vec<usize>,
}

impl ParsedLines {
    pub fn rejected_count(&self) -> usize {
        self.rejected_positions.len()
    }
}

/// Accepts a line only when its tokens spell the input sentence exactly.
///
/// Missing output lines count as empty and are rejected. Whitespace inside the
/// input sentence is ignored for the comparison.
pub fn parse_llm_lines<S: AsRef<str>, L: AsRef<str>>(sentences: &[S], lines: &[L]) -> ParsedLines {
    let mut out = ParsedLines::default();
    for (i, sentence) in sentences.iter().enumerate() {
        let line = lines.get(i).map_or("", |l| l.as_ref());
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        let expected = sentence.as_ref().chars().filter(|c| !c.is_whitespace());
        if !tokens.is_empty() && tokens.iter().flat_map(|t| t.chars()).eq(expected) {
            out.accepted.push(tokens);
            out.accepted_positions.push(i);
        } else {
            out.rejected_positions.push(i);
        }
    }
    out
}

pub fn count_words<T: AsRef<[String]>>(accepted: &[T]) -> Vocabulary {
    let mut v = Vocabulary::new();
    for tokens in accepted {
        for t in tokens.as_ref() {
            v.add(t, 1);
        }
    }
    v
}

/// Scores every entry by PMI and keeps the top `top_ratio` share of the
/// multi-character words.
///
/// Entries that never occur in the indexed corpus are dropped regardless of
/// the ratio; single characters are always kept. Ties rank by higher count,
/// then by word.
pub fn pmi_filter(v: &Vocabulary, index: &SuffixIndex, top_ratio: f64) -> Result<Vocabulary> {
    if !(top_ratio > 0.0 && top_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "top ratio must lie in (0, 1], got {top_ratio}"
        )));
    }
    let mut singles = Vec::new();
    let mut ranked = Vec::new();
    for e in v.iter() {
        let pmi = index.pmi(&e.word);
        let scored = VocabEntry {
            pmi: Some(pmi),
            ..e.clone()
        };
        if pmi == f64::INFINITY {
            singles.push(scored);
        } else if pmi.is_finite() {
            ranked.push((pmi, scored));
        }
    }
    ranked.sort_by(|(pa, a), (pb, b)| {
        pb.total_cmp(pa)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.word.cmp(&b.word))
    });
    let keep = keep_count(ranked.len(), top_ratio);
    let mut out = Vocabulary::new();
    for e in singles
        .into_iter()
        .chain(ranked.into_iter().take(keep).map(|(_, e)| e))
    {
        out.total_count += e.count;
        out.entries.insert(e.word.clone(), e);
    }
    Ok(out)
}

/// `ceil(ratio * m)`, tolerant of representation error in `ratio * m`.
fn keep_count(m: usize, ratio: f64) -> usize {
    let exact = ratio * m as f64;
    let keep = (exact - 1e-9 * exact.max(1.0)).ceil();
    (keep.max(0.0) as usize).min(m)
}

/// Sums counts per word. Scores are cleared since the counts changed.
pub fn merge(a: &Vocabulary, b: &Vocabulary) -> Vocabulary {
    let mut out = Vocabulary::new();
    for e in a.iter().chain(b.iter()) {
        out.add(&e.word, e.count);
    }
    out
}

//! Suffix array over the raw corpus, used for substring counts and PMI.

use std::cmp::Ordering;

use crate::corpus::{RawCorpus, SENTINEL};
use crate::error::{Error, Result};

/// Sorted suffixes of all sentences joined by [`SENTINEL`].
///
/// The sentinel sorts below every text character, and since queries never
/// contain it, no counted occurrence spans two sentences.
#[derive(Clone, Debug)]
pub struct SuffixIndex {
    buffer: Vec<char>,
    suffixes: Vec<u32>,
    total_chars: usize,
}

impl SuffixIndex {
    pub fn build(corpus: &RawCorpus) -> Self {
        Self::from_sentences(corpus.sentences.iter().map(String::as_str))
    }

    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a str>) -> Self {
        let mut buffer = Vec::new();
        let mut total_chars = 0;
        for (i, s) in sentences.into_iter().enumerate() {
            if i > 0 {
                buffer.push(SENTINEL);
            }
            let before = buffer.len();
            buffer.extend(s.chars());
            total_chars += buffer.len() - before;
        }
        let suffixes = suffix_array(&buffer);
        SuffixIndex {
            buffer,
            suffixes,
            total_chars,
        }
    }

    /// Number of non-sentinel characters, the `N` of the probability estimates.
    pub fn total_chars(&self) -> usize {
        self.total_chars
    }

    pub fn buffer(&self) -> &[char] {
        &self.buffer
    }

    pub fn suffixes(&self) -> &[u32] {
        &self.suffixes
    }

    fn cmp_prefix(&self, pos: u32, pattern: &[char]) -> Ordering {
        let tail = &self.buffer[pos as usize..];
        let k = pattern.len().min(tail.len());
        tail[..k].cmp(&pattern[..k]).then(k.cmp(&pattern.len()))
    }

    /// Occurrences of `pattern` in the corpus, in `O(|pattern| log N)`.
    pub fn occurrences_chars(&self, pattern: &[char]) -> usize {
        if pattern.is_empty() {
            return 0;
        }
        let lo = self
            .suffixes
            .partition_point(|&p| self.cmp_prefix(p, pattern) == Ordering::Less);
        let hi = lo
            + self.suffixes[lo..]
                .partition_point(|&p| self.cmp_prefix(p, pattern) == Ordering::Equal);
        hi - lo
    }

    pub fn occurrences(&self, s: &str) -> usize {
        let chars: Vec<char> = s.chars().collect();
        self.occurrences_chars(&chars)
    }

    fn p_chars(&self, s: &[char]) -> f64 {
        self.occurrences_chars(s) as f64 / self.total_chars as f64
    }

    /// `occurrences(s) / N`.
    pub fn unigram_p(&self, s: &str) -> Result<f64> {
        if self.total_chars == 0 {
            return Err(Error::EmptyIndex);
        }
        Ok(self.occurrences(s) as f64 / self.total_chars as f64)
    }

    /// Minimum over split points of `ln(p(w) / (p(left) * p(right)))`.
    ///
    /// Single characters have no split point and score `+inf`; strings that
    /// never occur score `-inf`.
    pub fn pmi(&self, w: &str) -> f64 {
        let chars: Vec<char> = w.chars().collect();
        self.pmi_chars(&chars)
    }

    pub fn pmi_chars(&self, w: &[char]) -> f64 {
        if w.len() == 1 {
            return f64::INFINITY;
        }
        if w.is_empty() || self.occurrences_chars(w) == 0 {
            return f64::NEG_INFINITY;
        }
        let whole = self.p_chars(w);
        (1..w.len())
            .map(|i| (whole / (self.p_chars(&w[..i]) * self.p_chars(&w[i..]))).ln())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Prefix-doubling construction, `O(n log^2 n)`.
fn suffix_array(text: &[char]) -> Vec<u32> {
    let n = text.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    if n == 0 {
        return sa;
    }
    let mut rank: Vec<u64> = text.iter().map(|&c| c as u64).collect();
    let mut next = vec![0u64; n];
    let mut k = 1;
    loop {
        // rank of the suffix starting k later, shifted so that "past the end" sorts first
        let key = |i: u32| {
            let i = i as usize;
            let second = if i + k < n { rank[i + k] + 1 } else { 0 };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = (key(sa[w - 1]) != key(sa[w])) as u64;
            next[sa[w] as usize] = next[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1] as usize] as usize == n - 1 || k >= n {
            break;
        }
        k *= 2;
    }
    sa
}

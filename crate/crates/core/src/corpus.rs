//! Raw and gold-standard corpora.
//!
//! All positions and lengths are counted in Unicode scalar values. Nothing is
//! normalized on load unless the caller passes a normalization hook.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Separator placed between sentences inside the suffix index. Never valid in input.
pub const SENTINEL: char = '\0';

/// Half-open character range `[start, end)` inside a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end, "empty span {start}..{end}");
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Unsegmented text, one sentence per entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawCorpus {
    pub id: String,
    pub sentences: Vec<String>,
}

impl RawCorpus {
    pub fn new(id: impl Into<String>, sentences: Vec<String>) -> Result<Self> {
        for (i, s) in sentences.iter().enumerate() {
            if s.contains(SENTINEL) {
                return Err(Error::ReservedChar {
                    path: "<memory>".into(),
                    line: i + 1,
                });
            }
        }
        Ok(RawCorpus {
            id: id.into(),
            sentences,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Total number of characters across all sentences.
    pub fn char_count(&self) -> usize {
        self.sentences.iter().map(|s| s.chars().count()).sum()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_lines(path.as_ref(), self.sentences.iter().map(String::as_str))
    }
}

/// Reference segmentation: tokens per sentence plus their spans over the
/// whitespace-free sentence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoldCorpus {
    pub sentences: Vec<Vec<String>>,
    pub spans: Vec<Vec<Span>>,
}

impl GoldCorpus {
    pub fn from_token_lists(sentences: Vec<Vec<String>>) -> Self {
        let spans = sentences.iter().map(|t| spans_of(t)).collect();
        GoldCorpus { sentences, spans }
    }

    /// Parses gold text already in memory. Whitespace-only lines are skipped.
    pub fn parse(text: &str) -> Self {
        let sentences = text
            .lines()
            .map(|line| {
                line.split_whitespace()
                    .map(str::to_owned)
                    .collect::<Vec<_>>()
            })
            .filter(|tokens| !tokens.is_empty())
            .collect();
        GoldCorpus::from_token_lists(sentences)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Writes tokens joined by single spaces, one sentence per line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let lines: Vec<String> = self.sentences.iter().map(|t| t.join(" ")).collect();
        write_lines(path.as_ref(), lines.iter().map(String::as_str))
    }
}

/// Spans of consecutive tokens laid end to end.
pub fn spans_of<S: AsRef<str>>(tokens: &[S]) -> Vec<Span> {
    let mut pos = 0;
    tokens
        .iter()
        .map(|t| {
            let start = pos;
            pos += t.as_ref().chars().count();
            Span { start, end: pos }
        })
        .collect()
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        path: path.to_owned(),
        offset: e.utf8_error().valid_up_to(),
    })
}

pub(crate) fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for line in lines {
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads one sentence per line. Blank lines are dropped; everything else is
/// kept verbatim apart from a trailing carriage return.
pub fn load_raw(path: impl AsRef<Path>) -> Result<RawCorpus> {
    load_raw_with(path, None)
}

/// Like [`load_raw`], with an optional per-sentence normalization hook.
pub fn load_raw_with(
    path: impl AsRef<Path>,
    normalize: Option<&dyn Fn(&str) -> String>,
) -> Result<RawCorpus> {
    let path = path.as_ref();
    let text = read_utf8(path)?;
    let mut sentences = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let line = match normalize {
            Some(f) => f(line),
            None => line.to_owned(),
        };
        if line.contains(SENTINEL) {
            return Err(Error::ReservedChar {
                path: path.to_owned(),
                line: i + 1,
            });
        }
        sentences.push(line);
    }
    Ok(RawCorpus {
        id: path.display().to_string(),
        sentences,
    })
}

/// Loads a whitespace-separated gold segmentation.
pub fn load_gold(path: impl AsRef<Path>) -> Result<GoldCorpus> {
    let path = path.as_ref();
    let text = read_utf8(path)?;
    if let Some(line) = text.lines().position(|l| l.contains(SENTINEL)) {
        return Err(Error::ReservedChar {
            path: path.to_owned(),
            line: line + 1,
        });
    }
    Ok(GoldCorpus::parse(&text))
}

/// Removes the segmentation, yielding the unsegmented sentences.
pub fn strip_gold(gold: &GoldCorpus) -> RawCorpus {
    RawCorpus {
        id: "gold".into(),
        sentences: gold.sentences.iter().map(|t| t.concat()).collect(),
    }
}

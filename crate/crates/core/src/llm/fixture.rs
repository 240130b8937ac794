use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use super::{BatchFailure, SegmentationSource};
use crate::error::{Error, Result};

/// Canned sentence → output-line responses.
///
/// File format: UTF-8 lines alternating `>sentence` and `<output`. Blank
/// lines are ignored. When a sentence appears twice the later output wins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fixture {
    responses: HashMap<String, String>,
    order: Vec<String>,
}

impl Fixture {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sentence: impl Into<String>, output: impl Into<String>) {
        let sentence = sentence.into();
        if self
            .responses
            .insert(sentence.clone(), output.into())
            .is_none()
        {
            self.order.push(sentence);
        }
    }

    pub fn get(&self, sentence: &str) -> Option<&str> {
        self.responses.get(sentence).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Format {
            path: path.to_owned(),
            line,
            message,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut fixture = Fixture::new();
        let mut pending: Option<(usize, &str)> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if let Some(sentence) = line.strip_prefix('>') {
                if let Some((at, _)) = pending {
                    return Err((at, "sentence without an output line".into()));
                }
                pending = Some((i + 1, sentence));
            } else if let Some(output) = line.strip_prefix('<') {
                let (_, sentence) = pending.take().ok_or_else(|| {
                    (i + 1, "output line without a preceding sentence".to_owned())
                })?;
                if fixture.get(sentence).is_some() {
                    log::warn!("fixture line {}: duplicate sentence {sentence:?}, keeping the later output", i + 1);
                }
                fixture.insert(sentence, output);
            } else if !line.trim().is_empty() {
                return Err((i + 1, "expected a line starting with '>' or '<'".into()));
            }
        }
        if let Some((at, _)) = pending {
            return Err((at, "sentence without an output line".into()));
        }
        Ok(fixture)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.order {
            let _ = writeln!(out, ">{s}\n<{}", self.responses[s]);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

impl SegmentationSource for Fixture {
    /// Unknown sentences get an empty line, which validation rejects.
    fn segment_batch(&self, batch: &[&str]) -> std::result::Result<Vec<String>, BatchFailure> {
        Ok(batch
            .iter()
            .map(|s| self.get(s).unwrap_or_default().to_owned())
            .collect())
    }
}

/// Passes requests through to another source and remembers every reply.
pub struct Recorder<S> {
    inner: S,
    seen: Mutex<Fixture>,
}

impl<S: SegmentationSource> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Recorder {
            inner,
            seen: Mutex::new(Fixture::new()),
        }
    }

    pub fn fixture(&self) -> Fixture {
        self.seen.lock().expect("recorder poisoned").clone()
    }
}

impl<S: SegmentationSource> SegmentationSource for Recorder<S> {
    fn segment_batch(&self, batch: &[&str]) -> std::result::Result<Vec<String>, BatchFailure> {
        let lines = self.inner.segment_batch(batch)?;
        let mut seen = self.seen.lock().expect("recorder poisoned");
        for (i, s) in batch.iter().enumerate() {
            seen.insert(*s, lines.get(i).cloned().unwrap_or_default());
        }
        Ok(lines)
    }
}

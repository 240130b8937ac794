//! Span-level precision, recall and F-measure.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::corpus::{spans_of, GoldCorpus, Span};
use crate::error::{Error, Result};
use crate::par;

/// One sentence where prediction and gold disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub index: usize,
    pub gold: Vec<String>,
    pub predicted: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub mismatches: Vec<Mismatch>,
}

impl EvalReport {
    /// Micro-averaged scores from raw counts.
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f_measure,
            correct,
            predicted,
            gold,
            mismatches: Vec::new(),
        }
    }

    /// Writes one mismatch per line: `index<TAB>gold tokens<TAB>predicted tokens`.
    pub fn write_mismatches(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for m in &self.mismatches {
            writeln!(
                out,
                "{}\t{}\t{}",
                m.index,
                m.gold.join(" "),
                m.predicted.join(" ")
            )
            .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F={:.4} correct={} pred={} gold={}",
            self.precision, self.recall, self.f_measure, self.correct, self.predicted, self.gold
        )
    }
}

/// Compares token spans sentence by sentence and micro-averages over the corpus.
pub fn token_prf(gold: &GoldCorpus, pred: &GoldCorpus) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            line: gold.len().min(pred.len()) + 1,
            message: format!(
                "gold has {} sentences, prediction has {}",
                gold.len(),
                pred.len()
            ),
        });
    }
    let pairs: Vec<usize> = (0..gold.len()).collect();
    let per_sentence = par::map(&pairs, |&i| {
        compare(
            &gold.sentences[i],
            &gold.spans[i],
            &pred.sentences[i],
            &pred.spans[i],
        )
    });

    let (mut correct, mut predicted, mut gold_total) = (0, 0, 0);
    let mut mismatches = Vec::new();
    for (i, counts) in per_sentence.into_iter().enumerate() {
        let c = counts.map_err(|message| Error::Alignment {
            line: i + 1,
            message,
        })?;
        correct += c;
        predicted += pred.spans[i].len();
        gold_total += gold.spans[i].len();
        if c != gold.spans[i].len() || c != pred.spans[i].len() {
            mismatches.push(Mismatch {
                index: i,
                gold: gold.sentences[i].clone(),
                predicted: pred.sentences[i].clone(),
            });
        }
    }
    let mut report = EvalReport::from_counts(correct, predicted, gold_total);
    report.mismatches = mismatches;
    Ok(report)
}

fn compare(
    gold: &[String],
    gold_spans: &[Span],
    pred: &[String],
    pred_spans: &[Span],
) -> Result<usize, String> {
    if !gold
        .iter()
        .flat_map(|t| t.chars())
        .eq(pred.iter().flat_map(|t| t.chars()))
    {
        return Err(format!(
            "characters differ: gold {:?}, prediction {:?}",
            gold.concat(),
            pred.concat()
        ));
    }
    let gold_set: HashSet<&Span> = gold_spans.iter().collect();
    Ok(pred_spans.iter().filter(|s| gold_set.contains(s)).count())
}

/// Convenience for token lists that have not been wrapped in a corpus yet.
pub fn token_prf_lists(gold: &[Vec<String>], pred: &[Vec<String>]) -> Result<EvalReport> {
    token_prf(
        &GoldCorpus::from_token_lists(gold.to_vec()),
        &GoldCorpus {
            sentences: pred.to_vec(),
            spans: pred.iter().map(|t| spans_of(t)).collect(),
        },
    )
}

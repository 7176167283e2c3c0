//! Corpus ingestion: label extraction from rich text, rendering, statistics,
//! splits and low-resource subsets.

mod baseline;
mod extract;
mod split;
mod stats;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvalError;
use crate::labels::{CasingLabel, PunctLabel};

pub use baseline::most_frequent_casing_baseline;
pub use extract::{apply_casing, casing_of, extract_labels, render, render_word, render_words};
pub use split::{split_corpus, subset, CorpusSplit, SplitSpec};
pub use stats::{compute_stats, CorpusStats, JointRow, LabelCount, NextCasing, StatsAccumulator};

/// Version stamp written into every corpus-level file this module produces.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no words")]
    EmptyCorpus,
    #[error("split ratios must lie in [0, 1] and sum to 1 (got {train}, {dev}, {test})")]
    InvalidRatios { train: f64, dev: f64, test: f64 },
    #[error("requested {requested} documents but the corpus has {available}")]
    TooFewDocuments { requested: usize, available: usize },
    #[error("training statistics have no support for the Blank row")]
    NoBlankSupport,
    #[error("document `{id}` is invalid: {reason}")]
    InvalidDocument { id: String, reason: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported format_version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of the raw input corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

/// A word sequence with one casing and one punctuation label per word.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub words: Vec<String>,
    pub casing: Vec<CasingLabel>,
    pub punct: Vec<PunctLabel>,
}

impl LabeledDocument {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Checks the structural invariants: aligned label arrays, and every word
    /// a single lowercase lexical token with no punctuation.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |reason: String| CorpusError::InvalidDocument {
            id: self.id.clone(),
            reason,
        };
        if self.casing.len() != self.words.len() || self.punct.len() != self.words.len() {
            return Err(invalid(format!(
                "label arrays have lengths {} (casing) and {} (punct) for {} words",
                self.casing.len(),
                self.punct.len(),
                self.words.len()
            )));
        }
        for (i, w) in self.words.iter().enumerate() {
            if !is_lexical_word(w) {
                return Err(invalid(format!("word {i} ({w:?}) is not a lowercase lexical token")));
            }
        }
        Ok(())
    }
}

/// True for non-empty words made of lowercase or caseless alphanumerics,
/// with apostrophes or single hyphens only between two such characters.
fn is_lexical_word(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return false;
    }
    chars.iter().enumerate().all(|(i, &c)| {
        if c.is_alphanumeric() {
            !c.is_uppercase()
        } else if matches!(c, '\'' | '\u{2019}' | '-') {
            i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_alphanumeric()
                && chars[i + 1].is_alphanumeric()
        } else {
            false
        }
    })
}

#[derive(Serialize)]
struct LabeledLineOut<'a> {
    format_version: u32,
    #[serde(flatten)]
    doc: &'a LabeledDocument,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabeledLineIn {
    format_version: u32,
    id: String,
    words: Vec<String>,
    casing: Vec<CasingLabel>,
    punct: Vec<PunctLabel>,
}

fn non_blank_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), CorpusError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(CorpusError::Io(e))),
        })
}

/// Reads a `{"id", "text"}` JSONL corpus. Blank lines are skipped; errors
/// carry the 1-based line number.
pub fn read_raw_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>, CorpusError> {
    non_blank_lines(reader)
        .map(|item| {
            let (line, text) = item?;
            serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_labeled_jsonl<R: BufRead>(reader: R) -> Result<Vec<LabeledDocument>, CorpusError> {
    non_blank_lines(reader)
        .map(|item| {
            let (line, text) = item?;
            let rec: LabeledLineIn =
                serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
                    line,
                    message: e.to_string(),
                })?;
            if rec.format_version != FORMAT_VERSION {
                return Err(CorpusError::FormatVersion {
                    found: rec.format_version,
                    expected: FORMAT_VERSION,
                });
            }
            let doc = LabeledDocument {
                id: rec.id,
                words: rec.words,
                casing: rec.casing,
                punct: rec.punct,
            };
            doc.validate().map_err(|e| CorpusError::Malformed {
                line,
                message: e.to_string(),
            })?;
            Ok(doc)
        })
        .collect()
}

pub fn write_labeled_jsonl<W: Write>(
    mut writer: W,
    docs: &[LabeledDocument],
) -> Result<(), CorpusError> {
    for doc in docs {
        let line = serde_json::to_string(&LabeledLineOut {
            format_version: FORMAT_VERSION,
            doc,
        })
        .expect("labeled documents always serialize");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Runs label extraction over a raw corpus, in parallel, keeping input order.
pub fn extract_corpus(raw: &[RawDocument]) -> Vec<LabeledDocument> {
    use rayon::prelude::*;
    raw.par_iter()
        .map(|d| extract_labels(&d.text, &d.id))
        .collect()
}

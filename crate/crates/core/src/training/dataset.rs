use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{render_words, LabeledDocument};
use crate::eval::{report, ConfusionMatrix, EvalReport};
use crate::labels::{CasingLabel, PunctLabel, Task};
use crate::model::{predict_encoded, EncoderConfig, ModelParams};
use crate::tokenizer::{align_labels, build_vocab, encode, AlignedLabels, Encoding, Vocabulary};

use super::{Ablation, TrainingError};

/// Vocabulary induction settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSpec {
    pub target_size: usize,
    pub min_freq: u64,
    pub cased: bool,
}

impl Default for VocabSpec {
    fn default() -> Self {
        Self {
            target_size: 1000,
            min_freq: 2,
            cased: false,
        }
    }
}

/// Builds one vocabulary over the model inputs of several corpora, rendered
/// with the given ablation flags.
pub fn build_corpus_vocab(
    corpora: &[&[LabeledDocument]],
    spec: &VocabSpec,
    ablation: Ablation,
) -> Result<Vocabulary, TrainingError> {
    if ablation.input_casing && !spec.cased {
        return Err(TrainingError::VocabularyMismatch(
            "casing in the input needs a cased vocabulary".into(),
        ));
    }
    let words: Vec<String> = corpora
        .iter()
        .flat_map(|c| c.iter())
        .flat_map(|d| render_words(d, ablation.input_casing, ablation.input_punct))
        .collect();
    Ok(build_vocab(
        words.iter().map(String::as_str),
        spec.target_size,
        spec.cased,
        spec.min_freq,
    )?)
}

/// One document ready for the model: its chunks, aligned supervision and
/// gold word labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDoc {
    pub encodings: Vec<Encoding>,
    pub labels: Vec<AlignedLabels>,
    pub casing: Vec<CasingLabel>,
    pub punct: Vec<PunctLabel>,
}

/// Encoded corpus. Empty documents are dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreparedCorpus {
    pub docs: Vec<PreparedDoc>,
}

impl PreparedCorpus {
    pub fn new(
        docs: &[LabeledDocument],
        vocab: &Vocabulary,
        max_len: usize,
        ablation: Ablation,
    ) -> Result<Self, TrainingError> {
        let docs = docs
            .par_iter()
            .filter(|d| !d.is_empty())
            .map(|d| {
                let words = render_words(d, ablation.input_casing, ablation.input_punct);
                let encodings = encode(&words, vocab, max_len)?;
                let labels = align_labels(d, &encodings)?;
                Ok(PreparedDoc {
                    encodings,
                    labels,
                    casing: d.casing.clone(),
                    punct: d.punct.clone(),
                })
            })
            .collect::<Result<Vec<_>, TrainingError>>()?;
        Ok(Self { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn num_words(&self) -> usize {
        self.docs.iter().map(|d| d.casing.len()).sum()
    }
}

/// Casing and punctuation reports of `params` on a prepared corpus.
pub fn evaluate(
    params: &ModelParams,
    encoder: &EncoderConfig,
    corpus: &PreparedCorpus,
) -> Result<(EvalReport, EvalReport), TrainingError> {
    let encs: Vec<&[Encoding]> = corpus.docs.iter().map(|d| d.encodings.as_slice()).collect();
    let counts: Vec<usize> = corpus.docs.iter().map(|d| d.casing.len()).collect();
    let preds = predict_encoded(params, encoder, &encs, &counts)?;
    let mut casing = ConfusionMatrix::new(Task::Casing);
    let mut punct = ConfusionMatrix::new(Task::Punct);
    for (doc, pred) in corpus.docs.iter().zip(&preds) {
        casing.add_labels(&doc.casing, &pred.casing)?;
        punct.add_labels(&doc.punct, &pred.punct)?;
    }
    Ok((report(&casing)?, report(&punct)?))
}

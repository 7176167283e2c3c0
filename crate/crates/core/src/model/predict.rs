use ndarray::{s, ArrayView1};

use crate::labels::{CasingLabel, Label, PunctLabel};
use crate::tokenizer::{encode, Encoding, Vocabulary};

use super::{forward, Batch, EncoderConfig, ModelError, ModelParams};

/// Documents per forward pass during inference.
const PREDICT_BATCH: usize = 32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordPredictions {
    pub casing: Vec<CasingLabel>,
    pub punct: Vec<PunctLabel>,
}

/// Index of the largest value; the lowest index wins ties.
fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Per-word predictions for already-encoded documents. `num_words[i]` is the
/// word count of document `i`.
pub fn predict_encoded(
    params: &ModelParams,
    config: &EncoderConfig,
    docs: &[&[Encoding]],
    num_words: &[usize],
) -> Result<Vec<WordPredictions>, ModelError> {
    assert_eq!(docs.len(), num_words.len(), "one word count per document");
    let mut out: Vec<WordPredictions> = num_words
        .iter()
        .map(|&n| WordPredictions {
            casing: vec![CasingLabel::Lower; n],
            punct: vec![PunctLabel::Blank; n],
        })
        .collect();
    for (group_idx, group) in docs.chunks(PREDICT_BATCH).enumerate() {
        let batch = Batch::from_documents(group.iter().copied());
        if batch.is_empty() {
            continue;
        }
        let fwd = forward(params, config, &batch, false, 0)?;
        for (bi, (enc, &doc)) in batch.sequences.iter().zip(&batch.document).enumerate() {
            let pred = &mut out[group_idx * PREDICT_BATCH + doc];
            for (ti, (wi, &first)) in enc.word_index.iter().zip(&enc.first_subword_mask).enumerate() {
                let (Some(w), true) = (wi, first) else { continue };
                if *w >= pred.casing.len() {
                    return Err(ModelError::ShapeMismatch(format!(
                        "word index {w} beyond document length {}",
                        pred.casing.len()
                    )));
                }
                pred.casing[*w] = CasingLabel::from_index(argmax(fwd.casing_logits.slice(s![bi, ti, ..])))
                    .expect("casing head width");
                pred.punct[*w] = PunctLabel::from_index(argmax(fwd.punct_logits.slice(s![bi, ti, ..])))
                    .expect("punct head width");
            }
        }
    }
    Ok(out)
}

/// Casing and punctuation label for every word, taken at each word's first
/// subword. Deterministic: no dropout.
pub fn predict<S: AsRef<str>>(
    params: &ModelParams,
    config: &EncoderConfig,
    words: &[S],
    vocab: &Vocabulary,
) -> Result<WordPredictions, ModelError> {
    if words.is_empty() {
        return Ok(WordPredictions::default());
    }
    let chunks = encode(words, vocab, config.max_positions)?;
    let mut preds = predict_encoded(params, config, &[chunks.as_slice()], &[words.len()])?;
    Ok(preds.pop().expect("one document"))
}

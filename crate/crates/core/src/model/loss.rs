use ndarray::{Array3, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::labels::Label;
use crate::tokenizer::AlignedLabels;

use super::forward::softmax_row;
use super::{Batch, ModelError};

/// Both task losses and their λ-weighted combination
/// `λ·ce_casing + (1 − λ)·ce_punct`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLoss {
    pub ce_casing: f64,
    pub ce_punct: f64,
    pub lambda: f64,
    pub joint: f64,
}

impl JointLoss {
    pub fn combine(ce_casing: f64, ce_punct: f64, lambda: f64) -> Self {
        Self {
            ce_casing,
            ce_punct,
            lambda,
            joint: lambda * ce_casing + (1.0 - lambda) * ce_punct,
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(ModelError::InvalidLambda(lambda))
    }
}

pub(crate) struct TaskLoss {
    pub ce: f64,
    /// d ce / d logits, zero at unsupervised positions.
    pub grad: Array3<f64>,
    pub supervised: usize,
}

/// Cross-entropy summed over the supervised positions of each document and
/// averaged over documents. A position is supervised when it is a first
/// subword and carries a label.
pub(crate) fn task_loss<L: Label>(
    logits: ArrayView3<f64>,
    batch: &Batch,
    labels: impl Fn(usize, usize) -> Option<L>,
) -> TaskLoss {
    let (num_docs, slots) = batch.document_slots();
    let mut doc_sums = vec![0.0; num_docs];
    let mut grad = Array3::zeros(logits.raw_dim());
    let mut supervised = 0;
    for (bi, enc) in batch.sequences.iter().enumerate() {
        for (ti, &first) in enc.first_subword_mask.iter().enumerate() {
            if !first {
                continue;
            }
            let Some(label) = labels(bi, ti) else { continue };
            supervised += 1;
            let row = logits.slice(ndarray::s![bi, ti, ..]);
            let probs = softmax_row(row);
            let y = label.index();
            doc_sums[slots[bi]] -= probs[y].ln();
            let mut g = grad.slice_mut(ndarray::s![bi, ti, ..]);
            g.assign(&probs);
            g[y] -= 1.0;
        }
    }
    let ce = if num_docs == 0 {
        0.0
    } else {
        doc_sums.iter().sum::<f64>() / num_docs as f64
    };
    if num_docs > 0 {
        grad.mapv_inplace(|g| g / num_docs as f64);
    }
    TaskLoss { ce, grad, supervised }
}

pub(crate) fn check_labels(batch: &Batch, labels: &[AlignedLabels]) -> Result<(), ModelError> {
    if labels.len() != batch.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} label arrays for {} sequences",
            labels.len(),
            batch.len()
        )));
    }
    for (i, (enc, lab)) in batch.sequences.iter().zip(labels).enumerate() {
        if lab.casing.len() != enc.len() || lab.punct.len() != enc.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "labels of sequence {i} do not match its {} tokens",
                enc.len()
            )));
        }
    }
    Ok(())
}

fn check_logits(logits: &Array3<f64>, batch: &Batch, classes: usize) -> Result<(), ModelError> {
    let expected = (batch.len(), batch.max_len(), classes);
    if logits.dim() != expected {
        return Err(ModelError::ShapeMismatch(format!(
            "logits have shape {:?}, expected {:?}",
            logits.dim(),
            expected
        )));
    }
    Ok(())
}

pub(crate) fn both_task_losses(
    casing_logits: &Array3<f64>,
    punct_logits: &Array3<f64>,
    batch: &Batch,
    labels: &[AlignedLabels],
) -> Result<(TaskLoss, TaskLoss), ModelError> {
    check_labels(batch, labels)?;
    check_logits(casing_logits, batch, super::NUM_CASING)?;
    check_logits(punct_logits, batch, super::NUM_PUNCT)?;
    let casing = task_loss(casing_logits.view(), batch, |b, t| labels[b].casing[t]);
    let punct = task_loss(punct_logits.view(), batch, |b, t| labels[b].punct[t]);
    if casing.supervised == 0 && punct.supervised == 0 {
        return Err(ModelError::NoSupervisedTokens);
    }
    Ok((casing, punct))
}

/// Joint loss of a forward pass against aligned labels.
pub fn joint_loss(
    casing_logits: &Array3<f64>,
    punct_logits: &Array3<f64>,
    batch: &Batch,
    labels: &[AlignedLabels],
    lambda: f64,
) -> Result<JointLoss, ModelError> {
    check_lambda(lambda)?;
    let (casing, punct) = both_task_losses(casing_logits, punct_logits, batch, labels)?;
    Ok(JointLoss::combine(casing.ce, punct.ce, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{CasingLabel, PunctLabel};
    use crate::tokenizer::Encoding;

    fn one_token_batch() -> (Batch, Vec<AlignedLabels>) {
        let enc = Encoding {
            token_ids: vec![2, 5],
            word_index: vec![None, Some(0)],
            first_subword_mask: vec![false, true],
        };
        let labels = AlignedLabels {
            casing: vec![None, Some(CasingLabel::Upper)],
            punct: vec![None, Some(PunctLabel::Comma)],
        };
        (Batch::from_sequences(vec![enc]), vec![labels])
    }

    #[test]
    fn uniform_punct_logits_give_ln_8() {
        let (batch, labels) = one_token_batch();
        let c = Array3::zeros((1, 2, 3));
        let p = Array3::zeros((1, 2, 8));
        let l = joint_loss(&c, &p, &batch, &labels, 0.0).unwrap();
        assert!((l.ce_punct - 8f64.ln()).abs() < 1e-12);
        assert!((l.ce_punct - 2.0794).abs() < 1e-4);
        assert_eq!(l.joint, l.ce_punct);
        assert!((l.ce_casing - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn combine_arithmetic_and_endpoints() {
        assert_eq!(JointLoss::combine(2.0, 4.0, 0.5).joint, 3.0);
        assert_eq!(JointLoss::combine(2.5, 4.1, 1.0).joint, 2.5);
        assert_eq!(JointLoss::combine(2.5, 4.1, 0.0).joint, 4.1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (batch, labels) = one_token_batch();
        let c = Array3::zeros((1, 2, 3));
        let p = Array3::zeros((1, 2, 8));
        assert!(matches!(joint_loss(&c, &p, &batch, &labels, 1.5), Err(ModelError::InvalidLambda(_))));
        let bad = Array3::zeros((1, 3, 3));
        assert!(matches!(joint_loss(&bad, &p, &batch, &labels, 0.5), Err(ModelError::ShapeMismatch(_))));
        let none = vec![AlignedLabels { casing: vec![None, None], punct: vec![None, None] }];
        assert!(matches!(joint_loss(&c, &p, &batch, &none, 0.5), Err(ModelError::NoSupervisedTokens)));
    }

    #[test]
    fn chunks_of_one_document_are_summed_before_averaging() {
        let (batch, labels) = one_token_batch();
        let two_chunks = Batch {
            sequences: vec![batch.sequences[0].clone(), batch.sequences[0].clone()],
            document: vec![0, 0],
        };
        let two_docs = Batch::from_sequences(two_chunks.sequences.clone());
        let labels2 = vec![labels[0].clone(), labels[0].clone()];
        let c = Array3::zeros((2, 2, 3));
        let p = Array3::zeros((2, 2, 8));
        let same_doc = joint_loss(&c, &p, &two_chunks, &labels2, 0.0).unwrap();
        let split = joint_loss(&c, &p, &two_docs, &labels2, 0.0).unwrap();
        assert!((same_doc.ce_punct - 2.0 * 8f64.ln()).abs() < 1e-12);
        assert!((split.ce_punct - 8f64.ln()).abs() < 1e-12);
    }
}

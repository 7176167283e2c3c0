use crate::eval::{report, ConfusionMatrix, EvalReport};
use crate::labels::{CasingLabel, Label, PunctLabel};

use super::{CorpusError, CorpusStats, LabeledDocument};

/// Predicts every word's casing as the most frequent casing that follows the
/// previous word's gold punctuation in the training statistics. Document
/// starts use the Blank row, as do rows the statistics never observed.
pub fn most_frequent_casing_baseline(
    train_stats: &CorpusStats,
    docs: &[LabeledDocument],
) -> Result<EvalReport, CorpusError> {
    let fallback = train_stats
        .row(PunctLabel::Blank)
        .argmax()
        .ok_or(CorpusError::NoBlankSupport)?;
    let by_row: Vec<CasingLabel> = PunctLabel::ALL
        .iter()
        .map(|&p| train_stats.row(p).argmax().unwrap_or(fallback))
        .collect();

    let mut cm = ConfusionMatrix::new(CasingLabel::TASK);
    for doc in docs {
        let mut prev = PunctLabel::Blank;
        for (&gold, &punct) in doc.casing.iter().zip(&doc.punct) {
            cm.add(gold.index(), by_row[prev.index()].index())?;
            prev = punct;
        }
    }
    Ok(report(&cm)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_stats, extract_labels};
    use crate::eval::round_half_up;

    #[test]
    fn all_lower_corpus_scores_one_third() {
        let train = [extract_labels("a b, c. d e; f", "t")];
        let stats = compute_stats(&train).unwrap();
        for row in stats.joint_dist.iter().filter(|r| r.has_support) {
            assert_eq!(row.argmax(), Some(CasingLabel::Lower));
        }
        let docs = [extract_labels("x y z", "d")];
        let rep = most_frequent_casing_baseline(&stats, &docs).unwrap();
        assert_eq!(round_half_up(rep.macro_f1), 33.33);
    }

    #[test]
    fn single_upper_word_with_upper_blank_row() {
        let train = [extract_labels("Alpha Beta Gamma", "t")];
        let stats = compute_stats(&train).unwrap();
        assert_eq!(stats.row(PunctLabel::Blank).argmax(), Some(CasingLabel::Upper));
        let rep = most_frequent_casing_baseline(&stats, &[extract_labels("Hello", "d")]).unwrap();
        assert_eq!(rep.accuracy, 100.0);
    }

    #[test]
    fn missing_blank_support_is_rejected() {
        let stats = compute_stats(&[extract_labels("a, b", "t")]).unwrap();
        assert!(matches!(
            most_frequent_casing_baseline(&stats, &[]),
            Err(CorpusError::NoBlankSupport)
        ));
    }
}

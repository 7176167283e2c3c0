use serde::{Deserialize, Serialize};

use crate::labels::{CasingLabel, Label, PunctLabel};

use super::{CorpusError, LabeledDocument, FORMAT_VERSION};

const NC: usize = 3;
const NP: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount<L> {
    pub label: L,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextCasing {
    pub label: CasingLabel,
    pub count: u64,
    pub prob: f64,
}

/// Distribution of the casing of the word that follows a punctuation label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub after: PunctLabel,
    pub support: u64,
    pub has_support: bool,
    /// One entry per casing class in schema order; all zero without support.
    pub next: Vec<NextCasing>,
}

impl JointRow {
    /// Most probable next casing, lowest class index on ties.
    pub fn argmax(&self) -> Option<CasingLabel> {
        if !self.has_support {
            return None;
        }
        let mut best = &self.next[0];
        for n in &self.next[1..] {
            if n.count > best.count {
                best = n;
            }
        }
        Some(best.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub format_version: u32,
    pub documents: u64,
    pub total_words: u64,
    pub casing: Vec<LabelCount<CasingLabel>>,
    pub punct: Vec<LabelCount<PunctLabel>>,
    pub joint_dist: Vec<JointRow>,
}

impl CorpusStats {
    pub fn row(&self, after: PunctLabel) -> &JointRow {
        &self.joint_dist[after.index()]
    }

    pub fn casing_count(&self, label: CasingLabel) -> u64 {
        self.casing[label.index()].count
    }

    pub fn punct_count(&self, label: PunctLabel) -> u64 {
        self.punct[label.index()].count
    }

    /// Label-count table followed by the next-word casing table.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Label counts ({} documents, {} words)\n",
            self.documents, self.total_words
        ));
        out.push_str(&format!("{:<12} {:<12} {:>12} {:>9}\n", "Task", "Label", "Count", "Perc.(%)"));
        for c in &self.punct {
            out.push_str(&format!(
                "{:<12} {:<12} {:>12} {:>9.2}\n",
                "Punctuation",
                c.label.name(),
                c.count,
                crate::eval::round_half_up(c.percent)
            ));
        }
        for c in &self.casing {
            out.push_str(&format!(
                "{:<12} {:<12} {:>12} {:>9.2}\n",
                "Truecasing",
                c.label.name(),
                c.count,
                crate::eval::round_half_up(c.percent)
            ));
        }
        out.push_str("\nNext-word casing after each punctuation label (%)\n");
        out.push_str(&format!("{:<12} {:>10}", "After", "Support"));
        for l in CasingLabel::ALL {
            out.push_str(&format!(" {:>8}", l.name()));
        }
        out.push('\n');
        for row in &self.joint_dist {
            out.push_str(&format!("{:<12} {:>10}", row.after.name(), row.support));
            for n in &row.next {
                if row.has_support {
                    out.push_str(&format!(" {:>8.2}", crate::eval::round_half_up(100.0 * n.prob)));
                } else {
                    out.push_str(&format!(" {:>8}", "-"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Raw label counts. Merging is a plain element-wise sum, so shards can be
/// accumulated in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    documents: u64,
    casing: [u64; NC],
    punct: [u64; NP],
    joint: [[u64; NC]; NP],
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, doc: &LabeledDocument) {
        self.documents += 1;
        for &c in &doc.casing {
            self.casing[c.index()] += 1;
        }
        for &p in &doc.punct {
            self.punct[p.index()] += 1;
        }
        for (p, c) in doc.punct.iter().zip(doc.casing.iter().skip(1)) {
            self.joint[p.index()][c.index()] += 1;
        }
    }

    pub fn merge(mut self, other: &StatsAccumulator) -> Self {
        self.documents += other.documents;
        for i in 0..NC {
            self.casing[i] += other.casing[i];
        }
        for p in 0..NP {
            self.punct[p] += other.punct[p];
            for c in 0..NC {
                self.joint[p][c] += other.joint[p][c];
            }
        }
        self
    }

    pub fn finish(&self) -> Result<CorpusStats, CorpusError> {
        let total: u64 = self.casing.iter().sum();
        if total == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        let pct = |n: u64| 100.0 * n as f64 / total as f64;
        let casing = CasingLabel::ALL
            .iter()
            .map(|&label| LabelCount {
                label,
                count: self.casing[label.index()],
                percent: pct(self.casing[label.index()]),
            })
            .collect();
        let punct = PunctLabel::ALL
            .iter()
            .map(|&label| LabelCount {
                label,
                count: self.punct[label.index()],
                percent: pct(self.punct[label.index()]),
            })
            .collect();
        let joint_dist = PunctLabel::ALL
            .iter()
            .map(|&after| {
                let counts = &self.joint[after.index()];
                let support: u64 = counts.iter().sum();
                JointRow {
                    after,
                    support,
                    has_support: support > 0,
                    next: CasingLabel::ALL
                        .iter()
                        .map(|&label| NextCasing {
                            label,
                            count: counts[label.index()],
                            prob: if support > 0 {
                                counts[label.index()] as f64 / support as f64
                            } else {
                                0.0
                            },
                        })
                        .collect(),
                }
            })
            .collect();
        Ok(CorpusStats {
            format_version: FORMAT_VERSION,
            documents: self.documents,
            total_words: total,
            casing,
            punct,
            joint_dist,
        })
    }
}

/// Label counts, percentages and the punctuation-to-next-casing distribution.
/// Pairs never cross document boundaries.
pub fn compute_stats(corpus: &[LabeledDocument]) -> Result<CorpusStats, CorpusError> {
    corpus
        .iter()
        .fold(StatsAccumulator::new(), |mut acc, d| {
            acc.add_document(d);
            acc
        })
        .finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_labels;

    #[test]
    fn hello_world_counts() {
        let stats = compute_stats(&[extract_labels("Hello, world!", "a")]).unwrap();
        assert_eq!(stats.total_words, 2);
        assert_eq!(stats.casing[CasingLabel::Lower.index()].percent, 50.0);
        assert_eq!(stats.casing[CasingLabel::Upper.index()].percent, 50.0);
        assert_eq!(stats.casing[CasingLabel::AllUpper.index()].percent, 0.0);
        assert_eq!(stats.punct_count(PunctLabel::Comma), 1);
        assert_eq!(stats.punct_count(PunctLabel::Exclamation), 1);
        assert_eq!(stats.punct_count(PunctLabel::Blank), 0);
        let comma = stats.row(PunctLabel::Comma);
        assert_eq!(comma.support, 1);
        assert_eq!(comma.next[CasingLabel::Lower.index()].prob, 1.0);
        assert_eq!(comma.argmax(), Some(CasingLabel::Lower));
    }

    #[test]
    fn single_word_has_no_joint_support() {
        let stats = compute_stats(&[extract_labels("Hi!", "a")]).unwrap();
        assert!(stats.joint_dist.iter().all(|r| !r.has_support && r.support == 0));
        assert!(stats.joint_dist.iter().all(|r| r.argmax().is_none()));
    }

    #[test]
    fn no_pairs_across_documents() {
        let stats = compute_stats(&[extract_labels("end.", "a"), extract_labels("Next", "b")]).unwrap();
        assert_eq!(stats.row(PunctLabel::FullStop).support, 0);
        assert_eq!(stats.documents, 2);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(compute_stats(&[]), Err(CorpusError::EmptyCorpus)));
        assert!(matches!(
            compute_stats(&[extract_labels("", "a")]),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn merge_matches_sequential_accumulation() {
        let docs: Vec<_> = ["A b, c.", "D? e", "F -- G... h"]
            .iter()
            .enumerate()
            .map(|(i, t)| extract_labels(t, &i.to_string()))
            .collect();
        let mut left = StatsAccumulator::new();
        left.add_document(&docs[0]);
        let mut right = StatsAccumulator::new();
        right.add_document(&docs[2]);
        right.add_document(&docs[1]);
        let merged = right.merge(&left);
        assert_eq!(merged.finish().unwrap(), compute_stats(&docs).unwrap());
    }

    #[test]
    fn tables_mention_every_label() {
        let stats = compute_stats(&[extract_labels("Hello, world!", "a")]).unwrap();
        let text = stats.render_tables();
        for l in PunctLabel::ALL {
            assert!(text.contains(l.name()));
        }
        assert!(text.contains("Next-word casing"));
    }
}

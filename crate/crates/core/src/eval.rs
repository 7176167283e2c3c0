//! Word-level scoring: confusion matrices, per-class precision/recall/F1 and
//! Macro F1 over the full label schema.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{Label, Task};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold has {gold} labels but prediction has {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label index {index} is outside the {task} schema")]
    UnknownLabel { task: Task, index: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("cannot compare a {left} report with a {right} report")]
    SchemaMismatch { left: Task, right: Task },
}

/// Counts indexed by (gold class, predicted class).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub task: Task,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(task: Task) -> Self {
        let k = task.num_classes();
        Self {
            task,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, gold: usize, pred: usize) -> Result<(), EvalError> {
        let k = self.num_classes();
        for index in [gold, pred] {
            if index >= k {
                return Err(EvalError::UnknownLabel {
                    task: self.task,
                    index,
                });
            }
        }
        self.counts[gold][pred] += 1;
        Ok(())
    }

    pub fn add_labels<L: Label>(&mut self, gold: &[L], pred: &[L]) -> Result<(), EvalError> {
        if gold.len() != pred.len() {
            return Err(EvalError::LengthMismatch {
                gold: gold.len(),
                pred: pred.len(),
            });
        }
        for (g, p) in gold.iter().zip(pred) {
            self.add(g.index(), p.index())?;
        }
        Ok(())
    }

    /// Element-wise sum; panics if the tasks differ.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.task, other.task, "merging confusion matrices of different tasks");
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion<L: Label>(gold: &[L], pred: &[L]) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::new(L::TASK);
    cm.add_labels(gold, pred)?;
    Ok(cm)
}

/// Same as [`confusion`] for raw class indices, which may be out of schema.
pub fn confusion_indices(task: Task, gold: &[usize], pred: &[usize]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(task);
    for (&g, &p) in gold.iter().zip(pred) {
        cm.add(g, p)?;
    }
    Ok(cm)
}

/// Scores for one class, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub task: Task,
    pub classes: Vec<ClassMetrics>,
    /// Unweighted mean of `classes[..].f1`, zero-support classes included.
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

/// Unweighted mean.
pub fn macro_f1(per_class_f1: &[f64]) -> f64 {
    per_class_f1.iter().sum::<f64>() / per_class_f1.len() as f64
}

/// Two decimals, ties away from zero. The nudge absorbs binary
/// representation error so that e.g. 1.005 rounds up.
pub fn round_half_up(x: f64) -> f64 {
    let scaled = x.abs() * 100.0;
    let rounded = (scaled + 0.5 + 1e-9 * scaled.max(1.0)).floor() / 100.0;
    rounded.copysign(x)
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = cm.num_classes();
    let names = cm.task.class_names();
    let mut correct = 0u64;
    let classes: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c];
            correct += tp;
            let predicted: u64 = (0..k).map(|g| cm.counts[g][c]).sum();
            let support: u64 = cm.counts[c].iter().sum();
            let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
            ClassMetrics {
                label: names[c].to_string(),
                precision: 100.0 * precision,
                recall: 100.0 * recall,
                f1: 100.0 * f1_score(precision, recall),
                support,
            }
        })
        .collect();
    let f1s: Vec<f64> = classes.iter().map(|c| c.f1).collect();
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        task: cm.task,
        macro_f1: macro_f1(&f1s),
        accuracy: 100.0 * correct as f64 / total as f64,
        total,
        classes,
        confusion: cm.clone(),
    })
}

impl EvalReport {
    pub fn f1_of(&self, label: &str) -> Option<f64> {
        self.classes.iter().find(|c| c.label == label).map(|c| c.f1)
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("Task: {}\n", self.task);
        out.push_str(&format!(
            "{:<12} {:>9} {:>9} {:>9} {:>9}\n",
            "Class", "P", "R", "F1", "Support"
        ));
        for c in &self.classes {
            out.push_str(&format!(
                "{:<12} {:>9.2} {:>9.2} {:>9.2} {:>9}\n",
                c.label,
                round_half_up(c.precision),
                round_half_up(c.recall),
                round_half_up(c.f1),
                c.support
            ));
        }
        out.push_str(&format!(
            "{:<12} {:>29.2} {:>9}\n",
            "Macro F1",
            round_half_up(self.macro_f1),
            self.total
        ));
        out.push_str(&format!("{:<12} {:>29.2}\n", "Accuracy", round_half_up(self.accuracy)));
        out
    }
}

/// Per-class and macro F1 differences `a - b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub task: Task,
    pub classes: Vec<(String, f64)>,
    pub macro_f1: f64,
}

pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<ReportDelta, EvalError> {
    if a.task != b.task || a.classes.len() != b.classes.len() {
        return Err(EvalError::SchemaMismatch {
            left: a.task,
            right: b.task,
        });
    }
    Ok(ReportDelta {
        task: a.task,
        classes: a
            .classes
            .iter()
            .zip(&b.classes)
            .map(|(x, y)| (x.label.clone(), x.f1 - y.f1))
            .collect(),
        macro_f1: a.macro_f1 - b.macro_f1,
    })
}

impl ReportDelta {
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<12} {:>9}\n", "Class", "dF1");
        for (label, d) in &self.classes {
            out.push_str(&format!("{:<12} {:>+9.2}\n", label, round_half_up(*d)));
        }
        out.push_str(&format!("{:<12} {:>+9.2}\n", "Macro F1", round_half_up(self.macro_f1)));
        out
    }
}

/// Class-wise F1 rows, one line per named report, columns in schema order.
pub fn render_classwise_table(task: Task, rows: &[(String, &EvalReport)]) -> String {
    let names = task.class_names();
    let mut out = format!("{:<16}", "Setting");
    for n in &names {
        out.push_str(&format!(" {:>11}", n));
    }
    out.push_str(&format!(" {:>9}\n", "Macro"));
    for (setting, rep) in rows {
        out.push_str(&format!("{:<16}", setting));
        for c in &rep.classes {
            out.push_str(&format!(" {:>11.2}", round_half_up(c.f1)));
        }
        out.push_str(&format!(" {:>9.2}\n", round_half_up(rep.macro_f1)));
    }
    out
}

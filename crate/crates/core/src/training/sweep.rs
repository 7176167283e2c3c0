use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledDocument;
use crate::eval::round_half_up;
use crate::model::EncoderConfig;
use crate::tokenizer::Vocabulary;

use super::dataset::{build_corpus_vocab, evaluate, PreparedCorpus, VocabSpec};
use super::trainer::{train, Init, StageInfo};
use super::{derive_seed, Ablation, TrainConfig, TrainingError};

pub const SWEEP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub setting: String,
    /// Test Macro F1 per column; `None` prints as a dash.
    pub cells: Vec<Option<f64>>,
}

/// Table of test Macro F1 scores, one row per setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub format_version: u32,
    pub title: String,
    /// Header of the setting column.
    pub setting_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn new(title: &str, setting_name: &str, columns: &[&str]) -> Self {
        Self {
            format_version: SWEEP_FORMAT_VERSION,
            title: title.to_string(),
            setting_name: setting_name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, setting: &str, cells: Vec<Option<f64>>) -> Result<(), TrainingError> {
        if self.rows.iter().any(|r| r.setting == setting) {
            return Err(TrainingError::DistinctSettings(setting.to_string()));
        }
        assert_eq!(cells.len(), self.columns.len(), "one cell per column");
        self.rows.push(SweepRow {
            setting: setting.to_string(),
            cells,
        });
        Ok(())
    }

    pub fn cell(&self, setting: &str, column: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r.setting == setting)?.cells[col]
    }

    pub fn render_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.setting.chars().count())
            .chain([self.setting_name.chars().count()])
            .max()
            .unwrap_or(0);
        let col_width = |c: &String| c.chars().count().max(6);
        let mut out = format!("{}\n{:<width$}", self.title, self.setting_name);
        for c in &self.columns {
            out.push_str(&format!("  {:>w$}", c, w = col_width(c)));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<width$}", row.setting));
            for (c, v) in self.columns.iter().zip(&row.cells) {
                let text = v.map_or("-".to_string(), |v| format!("{:.2}", round_half_up(v)));
                out.push_str(&format!("  {:>w$}", text, w = col_width(c)));
            }
            out.push('\n');
        }
        out
    }
}

/// One train-and-test run per λ. The λ=1 row reports casing only and the λ=0
/// row punctuation only.
pub fn lambda_sweep(
    train_docs: &[LabeledDocument],
    dev: &[LabeledDocument],
    test: &[LabeledDocument],
    lambdas: &[f64],
    vocab: &Vocabulary,
    encoder: &EncoderConfig,
    config: &TrainConfig,
) -> Result<SweepResult, TrainingError> {
    for (i, &l) in lambdas.iter().enumerate() {
        if !(0.0..=1.0).contains(&l) {
            return Err(TrainingError::InvalidConfig(format!("lambda {l} outside [0, 1]")));
        }
        if lambdas[..i].contains(&l) {
            return Err(TrainingError::DistinctSettings(format!("lambda {l} repeated")));
        }
    }
    let test_set = PreparedCorpus::new(test, vocab, encoder.max_positions, config.ablation)?;
    let rows = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let cfg = TrainConfig {
                lambda,
                seed: derive_seed(config.seed, i as u64),
                ..*config
            };
            let name = format!("lambda={lambda}");
            let stage = StageInfo { stage: &name, corpus_id: "train" };
            let ckpt = train(train_docs, dev, vocab, &cfg, Init::Random(*encoder), stage)?;
            let (casing, punct) = evaluate(&ckpt.params, &ckpt.encoder, &test_set)?;
            let cells = vec![
                (lambda > 0.0).then_some(casing.macro_f1),
                (lambda < 1.0).then_some(punct.macro_f1),
            ];
            Ok((lambda.to_string(), cells))
        })
        .collect::<Result<Vec<_>, TrainingError>>()?;
    let mut result = SweepResult::new("Multi-task test Macro F1", "lambda", &["casing", "punct"]);
    for (setting, cells) in rows {
        result.push_row(&setting, cells)?;
    }
    Ok(result)
}

/// Which label is toggled in the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationTarget {
    /// Casing in the input, evaluated on punctuation (λ=0).
    CasingInput,
    /// Punctuation in the input, evaluated on casing (λ=1).
    PunctInput,
}

/// Trains the single-task model of the other task with the chosen input
/// information on and off. Each arm builds its own vocabulary over its
/// rendered training inputs.
pub fn ablation_run(
    train_docs: &[LabeledDocument],
    dev: &[LabeledDocument],
    test: &[LabeledDocument],
    target: AblationTarget,
    vocab_spec: &VocabSpec,
    encoder: &EncoderConfig,
    config: &TrainConfig,
) -> Result<SweepResult, TrainingError> {
    let (lambda, what, column) = match target {
        AblationTarget::CasingInput => {
            if !vocab_spec.cased {
                return Err(TrainingError::VocabularyMismatch(
                    "casing in the input needs a cased vocabulary".into(),
                ));
            }
            (0.0, "casing", "punct")
        }
        AblationTarget::PunctInput => (1.0, "punctuation", "casing"),
    };
    let arms = [true, false];
    let rows = arms
        .par_iter()
        .enumerate()
        .map(|(i, &on)| {
            let ablation = match target {
                AblationTarget::CasingInput => Ablation { input_casing: on, input_punct: false },
                AblationTarget::PunctInput => Ablation { input_casing: false, input_punct: on },
            };
            let vocab = build_corpus_vocab(&[train_docs], vocab_spec, ablation)?;
            let enc = EncoderConfig { vocab_size: vocab.len(), ..*encoder };
            let cfg = TrainConfig {
                lambda,
                seed: derive_seed(config.seed, i as u64),
                cased_input: vocab_spec.cased,
                ablation,
                ..*config
            };
            let setting = format!("{} {what} in input", if on { "with" } else { "without" });
            let stage = StageInfo { stage: &setting, corpus_id: "train" };
            let ckpt = train(train_docs, dev, &vocab, &cfg, Init::Random(enc), stage)?;
            let test_set = PreparedCorpus::new(test, &vocab, enc.max_positions, ablation)?;
            let (casing, punct) = evaluate(&ckpt.params, &ckpt.encoder, &test_set)?;
            let f1 = if lambda == 1.0 { casing.macro_f1 } else { punct.macro_f1 };
            Ok((setting, vec![Some(f1)]))
        })
        .collect::<Result<Vec<_>, TrainingError>>()?;
    let mut result = SweepResult::new("Input ablation test Macro F1", "input", &[column]);
    for (setting, cells) in rows {
        result.push_row(&setting, cells)?;
    }
    Ok(result)
}

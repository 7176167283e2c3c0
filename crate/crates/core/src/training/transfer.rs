use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{subset, CorpusSplit, LabeledDocument};
use crate::model::EncoderConfig;
use crate::tokenizer::Vocabulary;

use super::dataset::{evaluate, PreparedCorpus};
use super::sweep::SweepResult;
use super::trainer::{train, Init, StageInfo};
use super::{derive_seed, Checkpoint, TrainConfig, TrainingError};

pub const INTERMEDIATE_STAGE: &str = "intermediate";
pub const TARGET_STAGE: &str = "target";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    /// Settings for target-domain training; `learning_rate` applies to the
    /// from-scratch arm.
    pub base: TrainConfig,
    /// Learning rate when fine-tuning the intermediate checkpoint.
    pub finetune_learning_rate: f64,
    /// λ of the intermediate stage.
    pub intermediate_lambda: f64,
    pub source_id: String,
    pub target_id: String,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            base: TrainConfig::default(),
            finetune_learning_rate: 1e-4,
            intermediate_lambda: 0.5,
            source_id: "source".into(),
            target_id: "target".into(),
        }
    }
}

/// Checkpoints produced for one target size. At size 0 only the
/// intermediate checkpoint is evaluated, so both are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferArm {
    pub size: usize,
    pub with_intermediate: Option<Checkpoint>,
    pub without_intermediate: Option<Checkpoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub result: SweepResult,
    pub intermediate: Checkpoint,
    pub arms: Vec<TransferArm>,
}

pub const TRANSFER_COLUMNS: [&str; 4] = ["with casing", "with punct", "w/o casing", "w/o punct"];

/// Trains on the full source corpus, then for every target size fine-tunes
/// that checkpoint on a nested target subset and, separately, trains from
/// scratch on the same subset. All scores are on the target test split.
pub fn transfer_pipeline(
    source: &CorpusSplit<LabeledDocument>,
    target: &CorpusSplit<LabeledDocument>,
    sizes: &[usize],
    vocab: &Vocabulary,
    encoder: &EncoderConfig,
    config: &TransferConfig,
) -> Result<TransferOutcome, TrainingError> {
    for w in sizes.windows(2) {
        if w[0] == w[1] {
            return Err(TrainingError::DistinctSettings(format!("size {} repeated", w[0])));
        }
        if w[0] > w[1] {
            return Err(TrainingError::InvalidConfig("sizes must be sorted ascending".into()));
        }
    }
    if !(config.finetune_learning_rate.is_finite() && config.finetune_learning_rate > 0.0) {
        return Err(TrainingError::InvalidConfig("finetune_learning_rate must be positive".into()));
    }
    let seed = config.base.seed;
    let stage1_cfg = TrainConfig {
        lambda: config.intermediate_lambda,
        seed: derive_seed(seed, 0),
        ..config.base
    };
    let intermediate = train(
        &source.train,
        &source.dev,
        vocab,
        &stage1_cfg,
        Init::Random(*encoder),
        StageInfo { stage: INTERMEDIATE_STAGE, corpus_id: &config.source_id },
    )?;

    let test_set = PreparedCorpus::new(&target.test, vocab, encoder.max_positions, config.base.ablation)?;
    let subset_seed = derive_seed(seed, 1);
    let target_stage = StageInfo { stage: TARGET_STAGE, corpus_id: &config.target_id };

    let arms = sizes
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            if n == 0 {
                let (c, p) = evaluate(&intermediate.params, &intermediate.encoder, &test_set)?;
                let cells = vec![Some(c.macro_f1), Some(p.macro_f1), None, None];
                return Ok((TransferArm { size: 0, with_intermediate: None, without_intermediate: None }, cells));
            }
            let docs = subset(&target.train, n, subset_seed)?;
            let i = i as u64;
            let finetune_cfg = TrainConfig {
                learning_rate: config.finetune_learning_rate,
                seed: derive_seed(seed, 2 + 2 * i),
                ..config.base
            };
            let with = train(&docs, &target.dev, vocab, &finetune_cfg, Init::From(&intermediate), target_stage)?;
            let scratch_cfg = TrainConfig {
                seed: derive_seed(seed, 3 + 2 * i),
                ..config.base
            };
            let without = train(&docs, &target.dev, vocab, &scratch_cfg, Init::Random(*encoder), target_stage)?;
            let (wc, wp) = evaluate(&with.params, &with.encoder, &test_set)?;
            let (oc, op) = evaluate(&without.params, &without.encoder, &test_set)?;
            let cells = vec![Some(wc.macro_f1), Some(wp.macro_f1), Some(oc.macro_f1), Some(op.macro_f1)];
            Ok((
                TransferArm { size: n, with_intermediate: Some(with), without_intermediate: Some(without) },
                cells,
            ))
        })
        .collect::<Result<Vec<_>, TrainingError>>()?;

    let mut result = SweepResult::new("Transfer test Macro F1", "docs", &TRANSFER_COLUMNS);
    let mut out_arms = Vec::with_capacity(arms.len());
    for (arm, cells) in arms {
        let setting = if arm.size == 0 { "0*".to_string() } else { arm.size.to_string() };
        result.push_row(&setting, cells)?;
        out_arms.push(arm);
    }
    Ok(TransferOutcome { result, intermediate, arms: out_arms })
}

//! Optimization of model parameters, the λ sweep, the ablation runs and the
//! two-stage transfer pipeline.

mod adam;
mod checkpoint;
mod dataset;
mod sweep;
mod trainer;
mod transfer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::model::ModelError;
use crate::tokenizer::TokenizerError;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, StageRecord};
pub use dataset::{build_corpus_vocab, evaluate, PreparedCorpus, VocabSpec};
pub use sweep::{ablation_run, lambda_sweep, AblationTarget, SweepResult, SweepRow, SWEEP_FORMAT_VERSION};
pub use trainer::{train, Init, StageInfo};
pub use transfer::{
    transfer_pipeline, TransferArm, TransferConfig, TransferOutcome, INTERMEDIATE_STAGE, TARGET_STAGE, TRANSFER_COLUMNS,
};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus has no usable documents")]
    EmptyTrainSet,
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("sweep settings must be distinct: {0}")]
    DistinctSettings(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("checkpoint metadata: {0}")]
    Metadata(String),
}

/// Which label information is rendered into the model input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ablation {
    pub input_casing: bool,
    pub input_punct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the casing loss; the punctuation loss gets `1 - lambda`.
    pub lambda: f64,
    pub learning_rate: f64,
    /// Documents per optimizer step.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without strict dev improvement before stopping.
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Whether the vocabulary keeps case.
    pub cased_input: bool,
    pub ablation: Ablation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            learning_rate: 3e-4,
            batch_size: 8,
            max_epochs: 50,
            patience: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            cased_input: false,
            ablation: Ablation::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.ablation.input_casing && !self.cased_input {
            return bad("casing in the input requires cased_input");
        }
        Ok(())
    }

    /// Task whose dev Macro F1 drives model selection.
    pub fn selection_task(&self) -> crate::Task {
        if self.lambda < 1.0 {
            crate::Task::Punct
        } else {
            crate::Task::Casing
        }
    }
}

/// Derives an independent seed for sub-stream `index` of `base` (splitmix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

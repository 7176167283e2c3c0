//! Transformer encoder with a casing head and a punctuation head, the
//! λ-weighted joint cross-entropy, and its exact gradients.

mod backward;
mod checkpoint;
mod forward;
mod loss;
mod params;
mod predict;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{AlignedLabels, Encoding, TokenizerError};

pub use backward::backward;
pub use checkpoint::{load_params, save_params, TensorEntry, TensorManifest, CHECKPOINT_FORMAT_VERSION};
pub use forward::{forward, ActivationCache, ForwardOutput};
pub use loss::{joint_loss, JointLoss};
pub use params::{HeadParams, LayerParams, ModelParams};
pub use predict::{predict, predict_encoded, WordPredictions};

pub const NUM_CASING: usize = 3;
pub const NUM_PUNCT: usize = 8;
/// Token id used for padding; fixed by the vocabulary layout.
pub const PAD_ID: u32 = 0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sequence of {len} tokens exceeds max_positions {max}")]
    PositionOverflow { len: usize, max: usize },
    #[error("lambda must lie in [0, 1] (got {0})")]
    InvalidLambda(f64),
    #[error("no supervised tokens in the batch for either task")]
    NoSupervisedTokens,
    #[error("activations were computed for different parameters or a different batch")]
    StaleActivations,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub model_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub head_dropout: f64,
    pub vocab_size: usize,
}

impl EncoderConfig {
    /// Two layers of width 64 with four heads: small enough to train from
    /// scratch on a CPU.
    pub fn desk_scale(vocab_size: usize) -> Self {
        Self {
            num_layers: 2,
            model_dim: 64,
            num_heads: 4,
            ffn_dim: 256,
            max_positions: 128,
            head_dropout: 0.1,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("num_layers", self.num_layers),
            ("model_dim", self.model_dim),
            ("num_heads", self.num_heads),
            ("ffn_dim", self.ffn_dim),
            ("max_positions", self.max_positions),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.model_dim % self.num_heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "model_dim {} is not divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.head_dropout) {
            return Err(ModelError::InvalidConfig(format!(
                "head_dropout {} outside [0, 1)",
                self.head_dropout
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.num_heads
    }
}

/// A set of chunk encodings processed together. Chunks of one document share
/// a document index; the loss sums over a document's chunks and averages
/// over documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub sequences: Vec<Encoding>,
    pub document: Vec<usize>,
}

impl Batch {
    /// One document per sequence.
    pub fn from_sequences(sequences: Vec<Encoding>) -> Self {
        let document = (0..sequences.len()).collect();
        Self { sequences, document }
    }

    /// Concatenates the chunk lists of several documents.
    pub fn from_documents<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a [Encoding]>,
    {
        let mut sequences = Vec::new();
        let mut document = Vec::new();
        for (i, chunks) in docs.into_iter().enumerate() {
            for c in chunks {
                sequences.push(c.clone());
                document.push(i);
            }
        }
        Self { sequences, document }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Padded length of the batch.
    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(Encoding::len).max().unwrap_or(0)
    }

    /// Number of distinct documents, and a dense remapping of `document`.
    pub(crate) fn document_slots(&self) -> (usize, Vec<usize>) {
        let mut ids: Vec<usize> = self.document.clone();
        ids.sort_unstable();
        ids.dedup();
        let slots = self
            .document
            .iter()
            .map(|d| ids.binary_search(d).expect("present"))
            .collect();
        (ids.len(), slots)
    }
}

/// Per-chunk supervision matching a [`Batch`].
pub type BatchLabels = [AlignedLabels];

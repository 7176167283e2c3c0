use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{load_params, save_params, EncoderConfig, ModelParams, TensorManifest};

use super::{TrainConfig, TrainingError};

/// One completed training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub stage: String,
    pub corpus_id: String,
    pub epochs_run: usize,
    /// Dev Macro F1 of the returned parameters, `None` without a dev set.
    pub dev_casing_f1: Option<f64>,
    pub dev_punct_f1: Option<f64>,
}

/// Trained parameters with the configuration and history that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub encoder: EncoderConfig,
    pub train_config: TrainConfig,
    /// Hash of the vocabulary the parameters were trained against.
    pub vocab_hash: String,
    pub lineage: Vec<StageRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    train_config: TrainConfig,
    vocab_hash: String,
    lineage: Vec<StageRecord>,
}

impl Checkpoint {
    /// Writes the manifest to `manifest_path` and the tensor blob beside it.
    pub fn save(&self, manifest_path: &Path) -> Result<TensorManifest, TrainingError> {
        let meta = Metadata {
            train_config: self.train_config,
            vocab_hash: self.vocab_hash.clone(),
            lineage: self.lineage.clone(),
        };
        let extra = serde_json::to_value(meta).map_err(|e| TrainingError::Metadata(e.to_string()))?;
        Ok(save_params(&self.params, &self.encoder, extra, manifest_path)?)
    }

    pub fn load(manifest_path: &Path) -> Result<Self, TrainingError> {
        let (params, manifest) = load_params(manifest_path)?;
        let meta: Metadata =
            serde_json::from_value(manifest.extra).map_err(|e| TrainingError::Metadata(e.to_string()))?;
        if meta.lineage.is_empty() {
            return Err(TrainingError::Metadata("empty lineage".into()));
        }
        Ok(Self {
            params,
            encoder: manifest.encoder,
            train_config: meta.train_config,
            vocab_hash: meta.vocab_hash,
            lineage: meta.lineage,
        })
    }

    pub fn stage_names(&self) -> Vec<&str> {
        self.lineage.iter().map(|s| s.stage.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let encoder = EncoderConfig {
            num_layers: 1,
            model_dim: 4,
            num_heads: 2,
            ffn_dim: 8,
            max_positions: 6,
            head_dropout: 0.1,
            vocab_size: 9,
        };
        let ckpt = Checkpoint {
            params: ModelParams::init(&encoder, 2).unwrap(),
            encoder,
            train_config: TrainConfig { lambda: 0.25, ..Default::default() },
            vocab_hash: "abc".into(),
            lineage: vec![StageRecord {
                stage: "intermediate".into(),
                corpus_id: "src".into(),
                epochs_run: 3,
                dev_casing_f1: Some(81.5),
                dev_punct_f1: None,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ckpt.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ckpt);
    }
}

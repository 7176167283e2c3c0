//! Run configuration: a TOML file, `--set key=value` overrides and the
//! resolved copy written beside every output.

use std::path::{Path, PathBuf};

use recase::corpus::SplitSpec;
use recase::model::EncoderConfig;
use recase::training::{Ablation, AblationTarget, TrainConfig, TransferConfig, VocabSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_ratio: f64,
    pub dev_ratio: f64,
    pub test_ratio: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitSpec::default();
        Self { train_ratio: d.train_ratio, dev_ratio: d.dev_ratio, test_ratio: d.test_ratio }
    }
}

/// Encoder shape; the vocabulary size comes from the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub num_layers: usize,
    pub model_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_positions: usize,
    pub head_dropout: f64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let d = EncoderConfig::desk_scale(0);
        Self {
            num_layers: d.num_layers,
            model_dim: d.model_dim,
            num_heads: d.num_heads,
            ffn_dim: d.ffn_dim,
            max_positions: d.max_positions,
            head_dropout: d.head_dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub ablation: Ablation,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lambda: d.lambda,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            ablation: d.ablation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    /// Runs the input ablation instead of the λ sweep.
    pub ablation: Option<AblationTarget>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { lambdas: vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0], ablation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    /// Target-domain document counts, ascending; 0 evaluates the
    /// intermediate checkpoint without fine-tuning.
    pub sizes: Vec<usize>,
    pub finetune_learning_rate: f64,
    pub intermediate_lambda: f64,
    pub source_id: String,
    pub target_id: String,
}

impl Default for TransferSection {
    fn default() -> Self {
        let d = TransferConfig::default();
        Self {
            sizes: vec![0, 50, 100, 250, 500, 1000, 5000],
            finetune_learning_rate: d.finetune_learning_rate,
            intermediate_lambda: d.intermediate_lambda,
            source_id: d.source_id,
            target_id: d.target_id,
        }
    }
}

/// Input and output locations. Command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub source_train: Option<PathBuf>,
    pub source_dev: Option<PathBuf>,
    pub target_train: Option<PathBuf>,
    pub target_dev: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    /// Every random choice (split, initialization, shuffling, dropout,
    /// subsets) derives from this seed.
    pub seed: u64,
    pub split: SplitSection,
    pub vocab: VocabSpec,
    pub encoder: EncoderSection,
    pub train: TrainSection,
    pub sweep: SweepSection,
    pub transfer: TransferSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            seed: 0,
            split: SplitSection::default(),
            vocab: VocabSpec::default(),
            encoder: EncoderSection::default(),
            train: TrainSection::default(),
            sweep: SweepSection::default(),
            transfer: TransferSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads `file` (if any), applies `key.path=value` overrides and then the
    /// seed flag. Values parse as TOML and fall back to plain strings.
    pub fn load(file: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self, CliError> {
        let mut root = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("override {item:?} is not key=value")))?;
            set_path(&mut root, key.trim(), parse_value(raw.trim()))?;
        }
        if let Some(seed) = seed {
            let seed = i64::try_from(seed).map_err(|_| CliError::usage("seed must fit in a signed 64-bit integer"))?;
            root.insert("seed".into(), toml::Value::Integer(seed));
        }
        let config: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::usage(format!("invalid configuration: {}", e.message())))?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(CliError::usage(format!(
                "unsupported config format_version {} (expected {CONFIG_FORMAT_VERSION})",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_ratio: self.split.train_ratio,
            dev_ratio: self.split.dev_ratio,
            test_ratio: self.split.test_ratio,
            seed: self.seed,
        }
    }

    pub fn encoder_config(&self, vocab_size: usize) -> EncoderConfig {
        let e = &self.encoder;
        EncoderConfig {
            num_layers: e.num_layers,
            model_dim: e.model_dim,
            num_heads: e.num_heads,
            ffn_dim: e.ffn_dim,
            max_positions: e.max_positions,
            head_dropout: e.head_dropout,
            vocab_size,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lambda: t.lambda,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            seed: self.seed,
            cased_input: self.vocab.cased,
            ablation: t.ablation,
        }
    }

    pub fn transfer_config(&self) -> TransferConfig {
        let t = &self.transfer;
        TransferConfig {
            base: self.train_config(),
            finetune_learning_rate: t.finetune_learning_rate,
            intermediate_lambda: t.intermediate_lambda,
            source_id: t.source_id.clone(),
            target_id: t.target_id.clone(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::usage(format!("invalid override key {key:?}")));
    }
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut table = root;
    for p in parents {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::usage(format!("override key {key:?}: {p} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_and_seed_apply() {
        let c = RunConfig::load(
            None,
            &["train.lambda=0.25".into(), "vocab.cased=true".into(), "paths.train=data/t.jsonl".into()],
            Some(9),
        )
        .unwrap();
        assert_eq!(c.train.lambda, 0.25);
        assert!(c.vocab.cased);
        assert_eq!(c.paths.train.as_deref(), Some(Path::new("data/t.jsonl")));
        assert_eq!(c.seed, 9);
        assert_eq!(c.train_config().seed, 9);
        assert!(c.train_config().cased_input);
        assert_eq!(c.split_spec().seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in ["train.lamda=0.5", "nope=1", "train.seed=3"] {
            let err = RunConfig::load(None, &[bad.into()], None).unwrap_err();
            assert_eq!(err.kind, crate::error::ErrorKind::Usage, "{bad}");
        }
        assert!(RunConfig::load(None, &["novalue".into()], None).is_err());
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 4\n[train]\nlambda = 0.75\nmax_epochs = 3\n").unwrap();
        let c = RunConfig::load(Some(&path), &["train.max_epochs=7".into()], None).unwrap();
        assert_eq!((c.seed, c.train.lambda, c.train.max_epochs), (4, 0.75, 7));
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::LabeledDocument;
use crate::eval::EvalReport;
use crate::labels::Task;
use crate::model::{backward, forward, Batch, EncoderConfig, ModelParams};
use crate::tokenizer::{AlignedLabels, Vocabulary};

use super::dataset::{evaluate, PreparedCorpus};
use super::{derive_seed, Adam, Checkpoint, StageRecord, TrainConfig, TrainingError};

/// Starting point of a training stage.
#[derive(Debug, Clone, Copy)]
pub enum Init<'a> {
    /// Fresh parameters for this encoder shape.
    Random(EncoderConfig),
    /// Continue from a previous stage; its lineage is extended.
    From(&'a Checkpoint),
}

/// Names recorded in the lineage for this stage.
#[derive(Debug, Clone, Copy)]
pub struct StageInfo<'a> {
    pub stage: &'a str,
    pub corpus_id: &'a str,
}

fn selection_score(task: Task, reports: &(EvalReport, EvalReport)) -> f64 {
    match task {
        Task::Casing => reports.0.macro_f1,
        Task::Punct => reports.1.macro_f1,
    }
}

/// Trains on `train` with Adam on the joint loss, selecting the epoch with
/// the best dev Macro F1 and stopping after `patience` epochs without strict
/// improvement. Without dev documents the last epoch is kept.
pub fn train(
    train: &[LabeledDocument],
    dev: &[LabeledDocument],
    vocab: &Vocabulary,
    config: &TrainConfig,
    init: Init<'_>,
    stage: StageInfo<'_>,
) -> Result<Checkpoint, TrainingError> {
    config.validate()?;
    if config.cased_input != vocab.cased() {
        return Err(TrainingError::VocabularyMismatch(format!(
            "cased_input is {} but the vocabulary is {}",
            config.cased_input,
            if vocab.cased() { "cased" } else { "uncased" }
        )));
    }
    let vocab_hash = vocab.hash();
    let (encoder, mut params, mut lineage) = match init {
        Init::Random(encoder) => {
            encoder.validate()?;
            if encoder.vocab_size != vocab.len() {
                return Err(TrainingError::VocabularyMismatch(format!(
                    "encoder expects {} tokens, vocabulary has {}",
                    encoder.vocab_size,
                    vocab.len()
                )));
            }
            let params = ModelParams::init(&encoder, derive_seed(config.seed, 0))?;
            (encoder, params, Vec::new())
        }
        Init::From(ckpt) => {
            if ckpt.vocab_hash != vocab_hash {
                return Err(TrainingError::VocabularyMismatch(
                    "checkpoint was trained with a different vocabulary".into(),
                ));
            }
            (ckpt.encoder, ckpt.params.clone(), ckpt.lineage.clone())
        }
    };

    let train_set = PreparedCorpus::new(train, vocab, encoder.max_positions, config.ablation)?;
    if train_set.is_empty() {
        return Err(TrainingError::EmptyTrainSet);
    }
    let dev_set = PreparedCorpus::new(dev, vocab, encoder.max_positions, config.ablation)?;
    let task = config.selection_task();

    let mut adam = Adam::new(&params, config);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    let mut step: u64 = 0;
    let mut best: Option<(f64, ModelParams, (EvalReport, EvalReport))> = None;
    let mut stale = 0;
    let mut epochs_run = 0;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for group in order.chunks(config.batch_size) {
            let docs = group.iter().map(|&i| &train_set.docs[i]);
            let batch = Batch::from_documents(docs.clone().map(|d| d.encodings.as_slice()));
            let labels: Vec<AlignedLabels> = docs.flat_map(|d| d.labels.iter().cloned()).collect();
            let out = forward(&params, &encoder, &batch, true, derive_seed(config.seed, 2 + step))?;
            let (loss, grads) = backward(&params, &encoder, &batch, &labels, config.lambda, &out.cache)?;
            if !loss.joint.is_finite() {
                return Err(TrainingError::Diverged { epoch });
            }
            adam.step(&mut params, &grads);
            epoch_loss += loss.joint * group.len() as f64;
            step += 1;
        }
        epochs_run = epoch + 1;
        let mean_loss = epoch_loss / train_set.len() as f64;

        if dev_set.is_empty() {
            log::info!(
                target: "recase::training",
                "{}",
                json!({"event": "epoch", "stage": stage.stage, "epoch": epochs_run, "train_loss": mean_loss})
            );
            continue;
        }
        let reports = evaluate(&params, &encoder, &dev_set)?;
        let score = selection_score(task, &reports);
        log::info!(
            target: "recase::training",
            "{}",
            json!({
                "event": "epoch",
                "stage": stage.stage,
                "epoch": epochs_run,
                "train_loss": mean_loss,
                "dev_casing_f1": reports.0.macro_f1,
                "dev_punct_f1": reports.1.macro_f1,
            })
        );
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, params.clone(), reports));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let (params, dev_reports) = match best {
        Some((_, p, r)) => (p, Some(r)),
        None if !dev_set.is_empty() => {
            let r = evaluate(&params, &encoder, &dev_set)?;
            (params, Some(r))
        }
        None => (params, None),
    };
    lineage.push(StageRecord {
        stage: stage.stage.to_string(),
        corpus_id: stage.corpus_id.to_string(),
        epochs_run,
        dev_casing_f1: dev_reports.as_ref().map(|r| r.0.macro_f1),
        dev_punct_f1: dev_reports.as_ref().map(|r| r.1.macro_f1),
    });
    log::info!(
        target: "recase::training",
        "{}",
        json!({"event": "stage_done", "stage": stage.stage, "corpus": stage.corpus_id, "epochs_run": epochs_run})
    );
    Ok(Checkpoint {
        params,
        encoder,
        train_config: *config,
        vocab_hash,
        lineage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_labels;
    use crate::training::{build_corpus_vocab, VocabSpec};

    fn corpus() -> Vec<LabeledDocument> {
        ["Hello there, friend.", "Is it NASA? yes", "we went home; it rained", "Bob said -- no!"]
            .iter()
            .enumerate()
            .map(|(i, t)| extract_labels(t, &format!("d{i}")))
            .collect()
    }

    fn setup() -> (Vec<LabeledDocument>, Vocabulary, EncoderConfig) {
        let docs = corpus();
        let spec = VocabSpec { target_size: 60, min_freq: 1, cased: false };
        let vocab = build_corpus_vocab(&[&docs], &spec, Default::default()).unwrap();
        let encoder = EncoderConfig {
            num_layers: 1,
            model_dim: 8,
            num_heads: 2,
            ffn_dim: 16,
            max_positions: 32,
            head_dropout: 0.1,
            vocab_size: vocab.len(),
        };
        (docs, vocab, encoder)
    }

    const STAGE: StageInfo<'static> = StageInfo { stage: "s", corpus_id: "c" };

    #[test]
    fn empty_train_set_is_rejected() {
        let (docs, vocab, encoder) = setup();
        let empty = vec![extract_labels("", "e")];
        let err = train(&empty, &docs, &vocab, &TrainConfig::default(), Init::Random(encoder), STAGE);
        assert!(matches!(err, Err(TrainingError::EmptyTrainSet)));
    }

    #[test]
    fn zero_epochs_keep_the_parameters() {
        let (docs, vocab, encoder) = setup();
        let cfg = TrainConfig { max_epochs: 2, ..Default::default() };
        let first = train(&docs, &docs, &vocab, &cfg, Init::Random(encoder), STAGE).unwrap();
        let cfg0 = TrainConfig { max_epochs: 0, ..Default::default() };
        let again = train(&docs, &docs, &vocab, &cfg0, Init::From(&first), STAGE).unwrap();
        assert_eq!(again.params, first.params);
        assert_eq!(again.lineage.len(), 2);
        assert_eq!(again.lineage[1].epochs_run, 0);
    }

    #[test]
    fn runs_are_bit_identical() {
        let (docs, vocab, encoder) = setup();
        let cfg = TrainConfig { max_epochs: 3, batch_size: 3, seed: 9, ..Default::default() };
        let a = train(&docs, &docs, &vocab, &cfg, Init::Random(encoder), STAGE).unwrap();
        let b = train(&docs, &docs, &vocab, &cfg, Init::Random(encoder), STAGE).unwrap();
        assert_eq!(a, b);
        let c = train(&docs, &docs, &vocab, &TrainConfig { seed: 10, ..cfg }, Init::Random(encoder), STAGE).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn vocabulary_mismatches_are_rejected() {
        let (docs, vocab, encoder) = setup();
        let cfg = TrainConfig { max_epochs: 1, ..Default::default() };
        let wrong_size = EncoderConfig { vocab_size: vocab.len() + 1, ..encoder };
        assert!(matches!(
            train(&docs, &docs, &vocab, &cfg, Init::Random(wrong_size), STAGE),
            Err(TrainingError::VocabularyMismatch(_))
        ));
        let ckpt = train(&docs, &docs, &vocab, &cfg, Init::Random(encoder), STAGE).unwrap();
        let other = build_corpus_vocab(&[&docs[..1]], &VocabSpec { target_size: 60, min_freq: 1, cased: false }, Default::default()).unwrap();
        assert!(matches!(
            train(&docs, &docs, &other, &cfg, Init::From(&ckpt), STAGE),
            Err(TrainingError::VocabularyMismatch(_))
        ));
        let cased = TrainConfig { cased_input: true, ..cfg };
        assert!(matches!(
            train(&docs, &docs, &vocab, &cased, Init::Random(encoder), STAGE),
            Err(TrainingError::VocabularyMismatch(_))
        ));
    }

    #[test]
    fn patience_stops_early() {
        let (docs, vocab, encoder) = setup();
        // A vanishing learning rate never strictly improves dev F1 after the
        // first epoch.
        let cfg = TrainConfig { max_epochs: 30, patience: 2, learning_rate: 1e-300, ..Default::default() };
        let ckpt = train(&docs, &docs, &vocab, &cfg, Init::Random(encoder), STAGE).unwrap();
        assert_eq!(ckpt.lineage[0].epochs_run, 3);
        assert!(ckpt.lineage[0].dev_punct_f1.is_some());
    }
}

//! File plumbing: atomic writes, corpus files and checkpoint directories.

use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use recase::corpus::{read_labeled_jsonl, read_raw_jsonl, write_labeled_jsonl, LabeledDocument, RawDocument};
use recase::tokenizer::Vocabulary;
use recase::training::Checkpoint;
use serde::Serialize;

use crate::config::{RunConfig, RESOLVED_CONFIG_FILE};
use crate::error::CliError;

pub const MODEL_FILE: &str = "model.json";
pub const VOCAB_FILE: &str = "vocab.json";

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::data(format!("cannot write in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::data(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes())
}

pub fn write_resolved_config(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    write_text(&dir.join(RESOLVED_CONFIG_FILE), &config.to_toml())
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))
}

pub fn read_raw(path: &Path) -> Result<Vec<RawDocument>, CliError> {
    read_raw_jsonl(open(path)?).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledDocument>, CliError> {
    read_labeled_jsonl(open(path)?).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn write_labeled(path: &Path, docs: &[LabeledDocument]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_labeled_jsonl(&mut buf, docs)?;
    write_atomic(path, &buf)
}

/// Writes `model.json`, `model.bin` and `vocab.json` into `dir`.
pub fn save_checkpoint(dir: &Path, ckpt: &Checkpoint, vocab: &Vocabulary) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    ckpt.save(&dir.join(MODEL_FILE))?;
    write_text(&dir.join(VOCAB_FILE), &vocab.to_json())
}

/// Loads a checkpoint directory and checks that its vocabulary matches.
pub fn load_checkpoint(dir: &Path) -> Result<(Checkpoint, Vocabulary), CliError> {
    let ckpt = Checkpoint::load(&dir.join(MODEL_FILE)).map_err(|e| CliError::from(e).context(dir.display()))?;
    let vocab_path = dir.join(VOCAB_FILE);
    let text = fs::read_to_string(&vocab_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", vocab_path.display())))?;
    let vocab = Vocabulary::from_json(&text).map_err(|e| CliError::from(e).context(vocab_path.display()))?;
    if vocab.hash() != ckpt.vocab_hash {
        return Err(CliError::data(format!(
            "{}: vocabulary does not match the checkpoint",
            dir.display()
        )));
    }
    if vocab.len() != ckpt.encoder.vocab_size {
        return Err(CliError::data(format!(
            "{}: vocabulary has {} tokens but the encoder expects {}",
            dir.display(),
            vocab.len(),
            ckpt.encoder.vocab_size
        )));
    }
    Ok((ckpt, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_text(&p, "one").unwrap();
        write_text(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(dir.path().join("sub")).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}

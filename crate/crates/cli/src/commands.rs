//! One function per subcommand. Each reads its inputs, runs the library
//! operation and writes its outputs plus the resolved configuration.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use recase::corpus::{
    compute_stats, extract_corpus, extract_labels, render, split_corpus, CorpusSplit, LabeledDocument, FORMAT_VERSION,
};
use recase::eval::EvalReport;
use recase::model::predict;
use recase::training::{
    ablation_run, build_corpus_vocab, evaluate as evaluate_corpus, lambda_sweep, train as train_stage,
    transfer_pipeline, Init, PreparedCorpus, StageInfo, StageRecord, INTERMEDIATE_STAGE, TARGET_STAGE,
};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{
    load_checkpoint, read_labeled, read_raw, save_checkpoint, write_json, write_labeled, write_resolved_config,
    write_text,
};

fn required<'a>(value: &'a Option<PathBuf>, flag: &str, key: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::usage(format!("missing --{flag} (or paths.{key} in the config)")))
}

fn out_dir(config: &RunConfig) -> Result<&Path, CliError> {
    required(&config.paths.out_dir, "out-dir", "out_dir")
}

fn event(value: serde_json::Value) {
    log::info!(target: "recase::cli", "{value}");
}

#[derive(Serialize)]
struct SplitManifest<'a> {
    format_version: u32,
    seed: u64,
    train_ratio: f64,
    dev_ratio: f64,
    test_ratio: f64,
    counts: SplitCounts,
    ids: SplitIds<'a>,
}

#[derive(Serialize)]
struct SplitCounts {
    train: usize,
    dev: usize,
    test: usize,
}

#[derive(Serialize)]
struct SplitIds<'a> {
    train: Vec<&'a str>,
    dev: Vec<&'a str>,
    test: Vec<&'a str>,
}

/// Raw JSONL in; labeled train/dev/test JSONL and a split manifest out.
pub fn prepare(config: &RunConfig) -> Result<(), CliError> {
    let input = required(&config.paths.input, "input", "input")?;
    let out = out_dir(config)?;
    let raw = read_raw(input)?;
    let docs = extract_corpus(&raw);
    let spec = config.split_spec();
    let split = split_corpus(&docs, &spec)?;
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        write_labeled(&out.join(format!("{name}.jsonl")), part)?;
    }
    fn ids(d: &[LabeledDocument]) -> Vec<&str> {
        d.iter().map(|x| x.id.as_str()).collect()
    }
    let manifest = SplitManifest {
        format_version: FORMAT_VERSION,
        seed: spec.seed,
        train_ratio: spec.train_ratio,
        dev_ratio: spec.dev_ratio,
        test_ratio: spec.test_ratio,
        counts: SplitCounts { train: split.train.len(), dev: split.dev.len(), test: split.test.len() },
        ids: SplitIds { train: ids(&split.train), dev: ids(&split.dev), test: ids(&split.test) },
    };
    write_json(&out.join("split.json"), &manifest)?;
    write_resolved_config(out, config)?;
    event(json!({
        "event": "prepared",
        "documents": docs.len(),
        "train": split.train.len(),
        "dev": split.dev.len(),
        "test": split.test.len(),
    }));
    println!(
        "{} documents: {} train, {} dev, {} test",
        docs.len(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    Ok(())
}

/// Label counts and the next-word casing distribution.
pub fn stats(config: &RunConfig) -> Result<(), CliError> {
    let input = required(&config.paths.input, "input", "input")?;
    let docs = read_labeled(input)?;
    let stats = compute_stats(&docs).map_err(|e| CliError::from(e).context(input.display()))?;
    let tables = stats.render_tables();
    if let Some(out) = &config.paths.out_dir {
        write_json(&out.join("stats.json"), &stats)?;
        write_text(&out.join("stats.txt"), &tables)?;
        write_resolved_config(out, config)?;
    }
    print!("{tables}");
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    format_version: u32,
    lineage: &'a [StageRecord],
    dev_casing: Option<EvalReport>,
    dev_punct: Option<EvalReport>,
}

/// Trains from scratch, or continues from `--init`, and saves the checkpoint.
pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let train_path = required(&config.paths.train, "train", "train")?;
    let out = out_dir(config)?;
    let train_docs = read_labeled(train_path)?;
    let dev_docs = match &config.paths.dev {
        Some(p) => read_labeled(p)?,
        None => Vec::new(),
    };
    let mut train_cfg = config.train_config();
    let corpus_id = path_id(train_path);
    let stage = StageInfo { stage: "train", corpus_id: &corpus_id };
    let (ckpt, vocab) = match &config.paths.init {
        Some(dir) => {
            let (init, vocab) = load_checkpoint(dir)?;
            train_cfg.cased_input = vocab.cased();
            (train_stage(&train_docs, &dev_docs, &vocab, &train_cfg, Init::From(&init), stage)?, vocab)
        }
        None => {
            let vocab = build_corpus_vocab(&[&train_docs], &config.vocab, train_cfg.ablation)?;
            let encoder = config.encoder_config(vocab.len());
            (train_stage(&train_docs, &dev_docs, &vocab, &train_cfg, Init::Random(encoder), stage)?, vocab)
        }
    };
    save_checkpoint(out, &ckpt, &vocab)?;
    let dev_reports = if dev_docs.is_empty() {
        None
    } else {
        let dev = PreparedCorpus::new(&dev_docs, &vocab, ckpt.encoder.max_positions, train_cfg.ablation)?;
        if dev.is_empty() {
            None
        } else {
            Some(evaluate_corpus(&ckpt.params, &ckpt.encoder, &dev)?)
        }
    };
    let (dev_casing, dev_punct) = match dev_reports {
        Some((c, p)) => (Some(c), Some(p)),
        None => (None, None),
    };
    let summary = TrainSummary { format_version: FORMAT_VERSION, lineage: &ckpt.lineage, dev_casing, dev_punct };
    write_json(&out.join("train.json"), &summary)?;
    write_resolved_config(out, config)?;
    let last = ckpt.lineage.last().expect("training records a stage");
    println!(
        "trained {} epochs; dev casing Macro F1 {}, dev punct Macro F1 {}",
        last.epochs_run,
        fmt_score(last.dev_casing_f1),
        fmt_score(last.dev_punct_f1)
    );
    Ok(())
}

fn fmt_score(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{:.2}", recase::eval::round_half_up(v)))
}

fn path_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// λ sweep, or the input ablation when `sweep.ablation` is set.
pub fn sweep(config: &RunConfig) -> Result<(), CliError> {
    let train_docs = read_labeled(required(&config.paths.train, "train", "train")?)?;
    let dev_docs = match &config.paths.dev {
        Some(p) => read_labeled(p)?,
        None => Vec::new(),
    };
    let test_docs = read_labeled(required(&config.paths.test, "test", "test")?)?;
    let out = out_dir(config)?;
    let train_cfg = config.train_config();
    let result = match config.sweep.ablation {
        Some(target) => ablation_run(
            &train_docs,
            &dev_docs,
            &test_docs,
            target,
            &config.vocab,
            &config.encoder_config(0),
            &train_cfg,
        )?,
        None => {
            let vocab = build_corpus_vocab(&[&train_docs], &config.vocab, train_cfg.ablation)?;
            write_text(&out.join("vocab.json"), &vocab.to_json())?;
            lambda_sweep(
                &train_docs,
                &dev_docs,
                &test_docs,
                &config.sweep.lambdas,
                &vocab,
                &config.encoder_config(vocab.len()),
                &train_cfg,
            )?
        }
    };
    let table = result.render_table();
    write_json(&out.join("sweep.json"), &result)?;
    write_text(&out.join("sweep.txt"), &table)?;
    write_resolved_config(out, config)?;
    print!("{table}");
    Ok(())
}

/// Two-stage transfer over the configured target sizes. Checkpoints go to
/// `intermediate/` and `n<size>-with/`, `n<size>-without/`.
pub fn transfer(config: &RunConfig) -> Result<(), CliError> {
    let p = &config.paths;
    let source = CorpusSplit {
        train: read_labeled(required(&p.source_train, "source-train", "source_train")?)?,
        dev: match &p.source_dev {
            Some(path) => read_labeled(path)?,
            None => Vec::new(),
        },
        test: Vec::new(),
    };
    let target = CorpusSplit {
        train: read_labeled(required(&p.target_train, "target-train", "target_train")?)?,
        dev: match &p.target_dev {
            Some(path) => read_labeled(path)?,
            None => Vec::new(),
        },
        test: read_labeled(required(&p.target_test, "target-test", "target_test")?)?,
    };
    let out = out_dir(config)?;
    let transfer_cfg = config.transfer_config();
    let vocab = build_corpus_vocab(&[&source.train, &target.train], &config.vocab, transfer_cfg.base.ablation)?;
    let encoder = config.encoder_config(vocab.len());
    let outcome = transfer_pipeline(&source, &target, &config.transfer.sizes, &vocab, &encoder, &transfer_cfg)?;
    save_checkpoint(&out.join(INTERMEDIATE_STAGE), &outcome.intermediate, &vocab)?;
    for arm in &outcome.arms {
        if let Some(c) = &arm.with_intermediate {
            save_checkpoint(&out.join(format!("n{}-with", arm.size)), c, &vocab)?;
        }
        if let Some(c) = &arm.without_intermediate {
            save_checkpoint(&out.join(format!("n{}-without", arm.size)), c, &vocab)?;
        }
    }
    let table = outcome.result.render_table();
    write_json(&out.join("transfer.json"), &outcome.result)?;
    write_text(&out.join("transfer.txt"), &table)?;
    write_resolved_config(out, config)?;
    event(json!({"event": "transfer_done", "stages": [INTERMEDIATE_STAGE, TARGET_STAGE], "sizes": config.transfer.sizes}));
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct EvaluationFile<'a> {
    format_version: u32,
    checkpoint: &'a Path,
    corpus: &'a Path,
    casing: &'a EvalReport,
    punct: &'a EvalReport,
}

/// Scores a checkpoint on a labeled corpus.
pub fn evaluate(config: &RunConfig) -> Result<(), CliError> {
    let dir = required(&config.paths.checkpoint, "checkpoint", "checkpoint")?;
    let input = required(&config.paths.input, "input", "input")?;
    let (ckpt, vocab) = load_checkpoint(dir)?;
    let docs = read_labeled(input)?;
    let prepared = PreparedCorpus::new(&docs, &vocab, ckpt.encoder.max_positions, ckpt.train_config.ablation)?;
    let (casing, punct) = evaluate_corpus(&ckpt.params, &ckpt.encoder, &prepared)?;
    let tables = format!("{}\n{}", casing.render_table(), punct.render_table());
    if let Some(out) = &config.paths.out_dir {
        let file = EvaluationFile {
            format_version: FORMAT_VERSION,
            checkpoint: dir,
            corpus: input,
            casing: &casing,
            punct: &punct,
        };
        write_json(&out.join("eval.json"), &file)?;
        write_text(&out.join("eval.txt"), &tables)?;
        write_resolved_config(out, config)?;
    }
    print!("{tables}");
    Ok(())
}

/// Restores casing and punctuation of plain text, one document per line.
/// Reads stdin and writes stdout unless paths are given; a written output
/// gets its resolved configuration beside it as `<name>.config.toml`.
pub fn predict_text(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let dir = required(&config.paths.checkpoint, "checkpoint", "checkpoint")?;
    let (ckpt, vocab) = load_checkpoint(dir)?;
    let ablation = ckpt.train_config.ablation;
    if ablation.input_casing || ablation.input_punct {
        return Err(CliError::usage(
            "prediction needs a checkpoint trained without label information in its input",
        ));
    }
    let mut text = String::new();
    match &config.paths.input {
        Some(p) => {
            std::fs::File::open(p)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", p.display())))?;
        }
        None => {
            std::io::stdin().lock().read_to_string(&mut text)?;
        }
    }
    let mut restored = String::with_capacity(text.len() * 2);
    for (i, line) in text.lines().enumerate() {
        let lowered = if line.chars().any(char::is_uppercase) {
            log::warn!(
                target: "recase::cli",
                "{}",
                json!({"event": "uppercase_input", "line": i + 1, "action": "lowercased"})
            );
            line.to_lowercase()
        } else {
            line.to_string()
        };
        let words = extract_labels(&lowered, "").words;
        let pred = predict(&ckpt.params, &ckpt.encoder, &words, &vocab)
            .map_err(|e| CliError::from(e).context(format!("line {}", i + 1)))?;
        let doc = LabeledDocument { id: String::new(), words, casing: pred.casing, punct: pred.punct };
        restored.push_str(&render(&doc, true, true));
        restored.push('\n');
    }
    match output {
        Some(path) => {
            write_text(path, &restored)?;
            let name = path.file_name().map_or("output".into(), |n| n.to_string_lossy().into_owned());
            write_text(&path.with_file_name(format!("{name}.config.toml")), &config.to_toml())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(restored.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

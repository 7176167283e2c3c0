mod common;

use recase::model::{predict, EncoderConfig};
use recase::training::{
    ablation_run, build_corpus_vocab, evaluate, train, AblationTarget, Init, PreparedCorpus, StageInfo, TrainConfig,
    VocabSpec,
};
use recase::PunctLabel;

#[test]
fn learns_the_comma_before_but() {
    let train_docs = common::rule_corpus(200, 1, &common::SOURCE_PRIORS, 41, "t");
    let dev = common::rule_corpus(40, 1, &common::SOURCE_PRIORS, 42, "d");
    let vocab = build_corpus_vocab(&[&train_docs], &VocabSpec::default(), Default::default()).unwrap();
    let enc = EncoderConfig::desk_scale(vocab.len());
    let config = TrainConfig { max_epochs: 60, patience: 60, batch_size: 4, learning_rate: 1e-3, ..Default::default() };
    let stage = StageInfo { stage: "train", corpus_id: "rules" };
    let ckpt = train(&train_docs, &dev, &vocab, &config, Init::Random(enc), stage).unwrap();

    let prepared = PreparedCorpus::new(&dev, &vocab, enc.max_positions, Default::default()).unwrap();
    let (_, punct) = evaluate(&ckpt.params, &ckpt.encoder, &prepared).unwrap();
    let comma = punct.f1_of("Comma").unwrap();
    assert!(comma > 95.0, "comma F1 {comma}\n{}", punct.render_table());

    let mut before_but = 0;
    for doc in &dev {
        let pred = predict(&ckpt.params, &ckpt.encoder, &doc.words, &vocab).unwrap();
        for i in 1..doc.len() {
            if doc.words[i] == "but" {
                before_but += 1;
                assert_eq!(pred.punct[i - 1], PunctLabel::Comma, "{:?} at {}", doc.words, i - 1);
            }
        }
    }
    assert!(before_but > 5, "only {before_but} clauses with but");
}

#[test]
fn punctuation_in_the_input_reveals_casing() {
    let train_docs = common::punct_cued_corpus(200, 1, "t");
    let dev = common::punct_cued_corpus(20, 2, "d");
    let test = common::punct_cued_corpus(60, 3, "e");
    // A small vocabulary keeps marks as subwords shared across words.
    let spec = VocabSpec { min_freq: 1, target_size: 64, ..Default::default() };
    let config = TrainConfig { max_epochs: 60, patience: 60, batch_size: 4, learning_rate: 1e-3, ..Default::default() };
    let result =
        ablation_run(&train_docs, &dev, &test, AblationTarget::PunctInput, &spec, &EncoderConfig::desk_scale(0), &config)
            .unwrap();
    let with = result.rows[0].cells[0].unwrap();
    let without = result.rows[1].cells[0].unwrap();
    assert!(result.rows[0].setting.starts_with("with "), "{:?}", result.rows[0].setting);
    assert!(with - without > 5.0, "with punctuation {with}, without {without}");
}

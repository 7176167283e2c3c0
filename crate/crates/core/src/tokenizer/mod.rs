//! Subword vocabulary induction, chunked encoding and first-subword label
//! alignment.

mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabeledDocument;
use crate::labels::{CasingLabel, PunctLabel};

pub use vocab::{
    build_vocab, Vocabulary, BOS_TOKEN, CONTINUATION_PREFIX, PAD_TOKEN, UNK_TOKEN,
    VOCAB_FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizerError {
    #[error("vocabulary target size {target} is below the {required} base tokens")]
    TargetTooSmall { target: usize, required: usize },
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("word {word:?} needs {tokens} subwords but a chunk holds at most {max}")]
    WordTooLong { word: String, tokens: usize, max: usize },
    #[error("max_len must be at least 2 (got {0})")]
    InvalidMaxLen(usize),
    #[error("document has {words} words but the encodings cover {encoded}")]
    AlignmentMismatch { words: usize, encoded: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
}

/// One chunk of a document: a BOS-prefixed subword sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Encoding {
    pub token_ids: Vec<u32>,
    /// Source word of each token; `None` for BOS and padding.
    pub word_index: Vec<Option<usize>>,
    pub first_subword_mask: Vec<bool>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    fn start(bos: u32) -> Self {
        Self {
            token_ids: vec![bos],
            word_index: vec![None],
            first_subword_mask: vec![false],
        }
    }
}

/// Encodes a word sequence into contiguous chunks of at most `max_len`
/// tokens each (BOS included). Words never straddle chunks.
pub fn encode<S: AsRef<str>>(
    words: &[S],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<Encoding>, TokenizerError> {
    if max_len < 2 {
        return Err(TokenizerError::InvalidMaxLen(max_len));
    }
    let mut chunks = Vec::new();
    let mut current = Encoding::start(vocab.bos_id());
    for (wi, word) in words.iter().enumerate() {
        let pieces = vocab.segment(word.as_ref());
        if pieces.len() > max_len - 1 {
            return Err(TokenizerError::WordTooLong {
                word: word.as_ref().to_string(),
                tokens: pieces.len(),
                max: max_len - 1,
            });
        }
        if current.len() + pieces.len() > max_len {
            chunks.push(std::mem::replace(&mut current, Encoding::start(vocab.bos_id())));
        }
        for (k, id) in pieces.into_iter().enumerate() {
            current.token_ids.push(id);
            current.word_index.push(Some(wi));
            current.first_subword_mask.push(k == 0);
        }
    }
    if current.len() > 1 {
        chunks.push(current);
    }
    Ok(chunks)
}

/// Per-token supervision for one chunk; `None` is the ignore label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedLabels {
    pub casing: Vec<Option<CasingLabel>>,
    pub punct: Vec<Option<PunctLabel>>,
}

/// Places each word's labels on its first subword; every other position
/// carries the ignore label.
pub fn align_labels(
    doc: &LabeledDocument,
    encodings: &[Encoding],
) -> Result<Vec<AlignedLabels>, TokenizerError> {
    let mismatch = |encoded| TokenizerError::AlignmentMismatch {
        words: doc.len(),
        encoded,
    };
    let mut seen = vec![false; doc.len()];
    let mut firsts = 0usize;
    let mut out = Vec::with_capacity(encodings.len());
    for enc in encodings {
        let mut casing = Vec::with_capacity(enc.len());
        let mut punct = Vec::with_capacity(enc.len());
        for (wi, &first) in enc.word_index.iter().zip(&enc.first_subword_mask) {
            match (wi, first) {
                (Some(w), true) => {
                    firsts += 1;
                    if *w >= doc.len() || seen[*w] {
                        return Err(mismatch(firsts));
                    }
                    seen[*w] = true;
                    casing.push(Some(doc.casing[*w]));
                    punct.push(Some(doc.punct[*w]));
                }
                _ => {
                    casing.push(None);
                    punct.push(None);
                }
            }
        }
        out.push(AlignedLabels { casing, punct });
    }
    if firsts != doc.len() {
        return Err(mismatch(firsts));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_labels;

    fn vocab_of(tokens: &[&str]) -> Vocabulary {
        let mut all = vec![PAD_TOKEN, UNK_TOKEN, BOS_TOKEN];
        all.extend_from_slice(tokens);
        let json = serde_json::json!({
            "format_version": 1, "cased": false, "continuation_prefix": "##",
            "pad": 0, "unk": 1, "bos": 2, "tokens": all,
        });
        Vocabulary::from_json(&json.to_string()).unwrap()
    }

    #[test]
    fn whole_word() {
        let v = vocab_of(&["hello"]);
        let enc = encode(&["hello"], &v, 8).unwrap();
        assert_eq!(enc.len(), 1);
        assert_eq!(enc[0].token_ids, vec![v.bos_id(), v.id("hello").unwrap()]);
        assert_eq!(enc[0].first_subword_mask, vec![false, true]);
        assert_eq!(enc[0].word_index, vec![None, Some(0)]);
    }

    #[test]
    fn first_subword_mask_on_split_word() {
        let v = vocab_of(&["un", "##happi", "##ness", "##h", "u"]);
        let enc = encode(&["unhappiness"], &v, 8).unwrap();
        let expected: Vec<u32> = ["un", "##happi", "##ness"].iter().map(|t| v.id(t).unwrap()).collect();
        assert_eq!(enc[0].token_ids[1..], expected[..]);
        assert_eq!(enc[0].first_subword_mask, vec![false, true, false, false]);
        assert_eq!(v.decode_word(&enc[0].token_ids[1..]), "unhappiness");
    }

    #[test]
    fn chunk_arithmetic() {
        // 30 one-token words, max_len 16: BOS + 15 words per chunk.
        let v = vocab_of(&["w"]);
        let words = vec!["w"; 30];
        let enc = encode(&words, &v, 16).unwrap();
        assert_eq!(enc.iter().map(Encoding::len).collect::<Vec<_>>(), vec![16, 16]);
        let first: Vec<usize> = enc[0].word_index.iter().flatten().copied().collect();
        let second: Vec<usize> = enc[1].word_index.iter().flatten().copied().collect();
        assert_eq!(first, (0..15).collect::<Vec<_>>());
        assert_eq!(second, (15..30).collect::<Vec<_>>());
    }

    #[test]
    fn words_do_not_straddle_chunks() {
        let v = vocab_of(&["a", "##b"]);
        let enc = encode(&["a", "ab", "ab"], &v, 4).unwrap();
        assert_eq!(enc.iter().map(Encoding::len).collect::<Vec<_>>(), vec![4, 3]);
        assert_eq!(enc[1].word_index, vec![None, Some(2), Some(2)]);
    }

    #[test]
    fn word_too_long_and_bad_max_len() {
        let v = vocab_of(&["a", "##a"]);
        assert!(matches!(
            encode(&["aaaa"], &v, 4),
            Err(TokenizerError::WordTooLong { tokens: 4, max: 3, .. })
        ));
        assert!(encode(&["aaa"], &v, 4).is_ok());
        assert_eq!(encode(&["a"], &v, 1), Err(TokenizerError::InvalidMaxLen(1)));
    }

    #[test]
    fn empty_document_has_no_chunks() {
        let v = vocab_of(&["a"]);
        let enc = encode::<&str>(&[], &v, 8).unwrap();
        assert!(enc.is_empty());
        let doc = extract_labels("", "e");
        assert!(align_labels(&doc, &enc).unwrap().is_empty());
    }

    #[test]
    fn align_first_subword() {
        let v = vocab_of(&["hel", "##lo"]);
        let doc = extract_labels("Hello,", "d");
        let enc = encode(&doc.words, &v, 8).unwrap();
        let al = align_labels(&doc, &enc).unwrap();
        assert_eq!(al[0].casing, vec![None, Some(CasingLabel::Upper), None]);
        assert_eq!(al[0].punct, vec![None, Some(PunctLabel::Comma), None]);
    }

    #[test]
    fn align_rejects_foreign_encodings() {
        let v = vocab_of(&["a", "b"]);
        let doc = extract_labels("a b", "d");
        let other = extract_labels("a", "o");
        let enc = encode(&other.words, &v, 8).unwrap();
        assert!(matches!(align_labels(&doc, &enc), Err(TokenizerError::AlignmentMismatch { words: 2, encoded: 1 })));
        let enc = encode(&doc.words, &v, 8).unwrap();
        assert!(align_labels(&other, &enc).is_err());
    }
}

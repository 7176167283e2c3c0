use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TokenizerError;

/// Prefix marking a word-internal subword.
pub const CONTINUATION_PREFIX: &str = "##";
pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const BOS_TOKEN: &str = "[BOS]";
const NUM_SPECIALS: usize = 3;
pub const VOCAB_FORMAT_VERSION: u32 = 1;

/// Immutable subword vocabulary. Ids are dense and start at zero with the
/// three special tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    cased: bool,
    max_token_chars: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    format_version: u32,
    cased: bool,
    continuation_prefix: String,
    pad: u32,
    unk: u32,
    bos: u32,
    tokens: Vec<String>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, cased: bool) -> Result<Self, TokenizerError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(TokenizerError::InvalidVocabulary(format!("duplicate token {t:?}")));
            }
        }
        if tokens.len() < NUM_SPECIALS
            || tokens[0] != PAD_TOKEN
            || tokens[1] != UNK_TOKEN
            || tokens[2] != BOS_TOKEN
        {
            return Err(TokenizerError::InvalidVocabulary(
                "special tokens must occupy ids 0..3".into(),
            ));
        }
        let max_token_chars = tokens
            .iter()
            .skip(NUM_SPECIALS)
            .map(|t| t.chars().count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            tokens,
            index,
            cased,
            max_token_chars,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn pad_id(&self) -> u32 {
        0
    }

    pub fn unk_id(&self) -> u32 {
        1
    }

    pub fn bos_id(&self) -> u32 {
        2
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < NUM_SPECIALS
    }

    pub fn cased(&self) -> bool {
        self.cased
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied().filter(|&i| !self.is_special(i))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Greedy longest-match segmentation of one word. A position where no
    /// vocabulary entry matches becomes a single-character UNK.
    pub fn segment(&self, word: &str) -> Vec<u32> {
        let word = if self.cased {
            word.to_string()
        } else {
            word.to_lowercase()
        };
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() {
            return vec![self.unk_id()];
        }
        let mut out = Vec::new();
        let mut start = 0;
        let mut piece = String::new();
        while start < chars.len() {
            let longest = (chars.len() - start).min(self.max_token_chars);
            let found = (1..=longest).rev().find_map(|len| {
                piece.clear();
                if start > 0 {
                    piece.push_str(CONTINUATION_PREFIX);
                }
                piece.extend(&chars[start..start + len]);
                self.id(&piece).map(|id| (id, len))
            });
            match found {
                Some((id, len)) => {
                    out.push(id);
                    start += len;
                }
                None => {
                    out.push(self.unk_id());
                    start += 1;
                }
            }
        }
        out
    }

    /// Concatenates the surface of a word's subwords, dropping the
    /// continuation prefix.
    pub fn decode_word(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter_map(|&id| self.token(id))
            .map(|t| t.strip_prefix(CONTINUATION_PREFIX).unwrap_or(t))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VocabFile {
            format_version: VOCAB_FORMAT_VERSION,
            cased: self.cased,
            continuation_prefix: CONTINUATION_PREFIX.into(),
            pad: self.pad_id(),
            unk: self.unk_id(),
            bos: self.bos_id(),
            tokens: self.tokens.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TokenizerError> {
        let file: VocabFile = serde_json::from_str(text)
            .map_err(|e| TokenizerError::InvalidVocabulary(e.to_string()))?;
        if file.format_version != VOCAB_FORMAT_VERSION {
            return Err(TokenizerError::InvalidVocabulary(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        if file.continuation_prefix != CONTINUATION_PREFIX || (file.pad, file.unk, file.bos) != (0, 1, 2) {
            return Err(TokenizerError::InvalidVocabulary(
                "unexpected special ids or continuation prefix".into(),
            ));
        }
        Self::from_tokens(file.tokens, file.cased)
    }

    /// Hex SHA-256 of the canonical JSON form; identifies the vocabulary a
    /// checkpoint was trained with.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Builds a subword vocabulary by iterative pair merging over the word
/// frequency table. Each step merges the adjacent pair maximizing
/// `count(pair) / (count(left) * count(right))`; ties go to the
/// lexicographically smallest merged surface. Merging stops at
/// `target_size` tokens or when no pair occurs at least `min_freq` times.
pub fn build_vocab<'a, I>(
    words: I,
    target_size: usize,
    cased: bool,
    min_freq: u64,
) -> Result<Vocabulary, TokenizerError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    for w in words {
        if w.is_empty() {
            continue;
        }
        let w = if cased { w.to_string() } else { w.to_lowercase() };
        *freq.entry(w).or_default() += 1;
    }
    if freq.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut alphabet = BTreeSet::new();
    let mut inner = BTreeSet::new();
    for w in freq.keys() {
        for (i, c) in w.chars().enumerate() {
            alphabet.insert(c);
            if i > 0 {
                inner.insert(c);
            }
        }
    }
    let mut tokens: Vec<String> = [PAD_TOKEN, UNK_TOKEN, BOS_TOKEN].map(String::from).to_vec();
    tokens.extend(alphabet.iter().map(|c| c.to_string()));
    tokens.extend(inner.iter().map(|c| format!("{CONTINUATION_PREFIX}{c}")));
    if target_size < tokens.len() {
        return Err(TokenizerError::TargetTooSmall {
            target: target_size,
            required: tokens.len(),
        });
    }
    let mut ids: HashMap<String, u32> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    let mut table: Vec<(Vec<u32>, u64)> = freq
        .iter()
        .map(|(w, &f)| {
            let syms = w
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    let t = if i == 0 {
                        c.to_string()
                    } else {
                        format!("{CONTINUATION_PREFIX}{c}")
                    };
                    ids[&t]
                })
                .collect();
            (syms, f)
        })
        .collect();

    let min_freq = min_freq.max(1);
    while tokens.len() < target_size {
        let mut symbol_counts = vec![0u64; tokens.len()];
        let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (syms, f) in &table {
            for &s in syms {
                symbol_counts[s as usize] += f;
            }
            for pair in syms.windows(2) {
                *pair_counts.entry((pair[0], pair[1])).or_default() += f;
            }
        }

        let mut best: Option<((u32, u32), u64, String)> = None;
        for (&(l, r), &count) in &pair_counts {
            if count < min_freq {
                continue;
            }
            let merged = merged_token(&tokens[l as usize], &tokens[r as usize]);
            let better = match &best {
                None => true,
                Some(((bl, br), bcount, bmerged)) => {
                    // count / (cl * cr) compared exactly by cross-multiplication
                    let lhs = count as u128
                        * symbol_counts[*bl as usize] as u128
                        * symbol_counts[*br as usize] as u128;
                    let rhs = *bcount as u128
                        * symbol_counts[l as usize] as u128
                        * symbol_counts[r as usize] as u128;
                    lhs > rhs || (lhs == rhs && tie_key(&merged) < tie_key(bmerged))
                }
            };
            if better {
                best = Some(((l, r), count, merged));
            }
        }
        let Some(((l, r), _, merged)) = best else {
            break;
        };

        let new_id = match ids.get(&merged) {
            Some(&id) => id,
            None => {
                let id = tokens.len() as u32;
                tokens.push(merged.clone());
                ids.insert(merged, id);
                id
            }
        };
        for (syms, _) in table.iter_mut() {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            *syms = out;
        }
    }
    Vocabulary::from_tokens(tokens, cased)
}

fn merged_token(left: &str, right: &str) -> String {
    format!(
        "{left}{}",
        right.strip_prefix(CONTINUATION_PREFIX).unwrap_or(right)
    )
}

/// Surface without the continuation prefix first, then the full token.
fn tie_key(token: &str) -> (&str, &str) {
    (token.strip_prefix(CONTINUATION_PREFIX).unwrap_or(token), token)
}

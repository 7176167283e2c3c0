//! Synthetic corpora whose labels are functions of lexical context.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recase::corpus::LabeledDocument;
use recase::{CasingLabel, PunctLabel};

const SUBJECTS: &[&str] = &["the cat", "a dog", "my friend", "the teacher", "our team", "the old man", "her sister", "a bird"];
const NAMES: &[&str] = &["john", "mary", "paris", "london", "alice", "peter"];
const ACRONYMS: &[&str] = &["nasa", "bbc", "usa", "fbi"];
const VERBS: &[&str] = &["saw", "liked", "found", "called", "visited", "helped", "watched", "met"];
const OBJECTS: &[&str] = &["the house", "a river", "the game", "some bread", "the city", "a letter", "the park"];
const QUESTION_WORDS: &[&str] = &["why", "where", "when", "how"];

/// Builder that tracks per-word labels.
#[derive(Default)]
struct Doc {
    words: Vec<String>,
    casing: Vec<CasingLabel>,
    punct: Vec<PunctLabel>,
}

impl Doc {
    fn push(&mut self, phrase: &str, sentence_start: bool) {
        for (i, w) in phrase.split(' ').enumerate() {
            let casing = if ACRONYMS.contains(&w) {
                CasingLabel::AllUpper
            } else if NAMES.contains(&w) || (sentence_start && i == 0) {
                CasingLabel::Upper
            } else {
                CasingLabel::Lower
            };
            self.words.push(w.to_string());
            self.casing.push(casing);
            self.punct.push(PunctLabel::Blank);
        }
    }

    fn mark(&mut self, p: PunctLabel) {
        *self.punct.last_mut().expect("a word before a mark") = p;
    }

    fn finish(self, id: String) -> LabeledDocument {
        let doc = LabeledDocument { id, words: self.words, casing: self.casing, punct: self.punct };
        doc.validate().expect("synthetic document is valid");
        doc
    }
}

fn noun<R: Rng>(rng: &mut R, pool: &[&'static str]) -> &'static str {
    match rng.random_range(0..10) {
        0..=1 => NAMES.choose(rng).unwrap(),
        2 => ACRONYMS.choose(rng).unwrap(),
        _ => pool.choose(rng).unwrap(),
    }
}

/// Priors over sentence types and connectives.
#[derive(Debug, Clone, Copy)]
pub struct Priors {
    pub question: f64,
    pub exclamation: f64,
    pub but_clause: f64,
    pub however_clause: f64,
    pub dash_clause: f64,
    pub well_opener: f64,
}

pub const SOURCE_PRIORS: Priors = Priors {
    question: 0.2,
    exclamation: 0.1,
    but_clause: 0.3,
    however_clause: 0.1,
    dash_clause: 0.1,
    well_opener: 0.1,
};
pub const TARGET_PRIORS: Priors = Priors {
    question: 0.35,
    exclamation: 0.2,
    but_clause: 0.15,
    however_clause: 0.3,
    dash_clause: 0.3,
    well_opener: 0.25,
};

fn sentence<R: Rng>(rng: &mut R, doc: &mut Doc, priors: &Priors) {
    let well = rng.random_bool(priors.well_opener);
    if well {
        doc.push("well", true);
        doc.mark(PunctLabel::Ellipsis);
    }
    let r: f64 = rng.random();
    if r < priors.question {
        // why did <noun> <verb> <noun> ?
        doc.push(QUESTION_WORDS.choose(rng).unwrap(), !well);
        doc.push("did", false);
        doc.push(noun(rng, SUBJECTS), false);
        doc.push(VERBS.choose(rng).unwrap(), false);
        doc.push(noun(rng, OBJECTS), false);
        doc.mark(PunctLabel::Question);
        return;
    }
    let exclaim = r < priors.question + priors.exclamation;
    if exclaim {
        doc.push("wow", !well);
        doc.mark(PunctLabel::Comma);
        doc.push(noun(rng, SUBJECTS), false);
    } else {
        doc.push(noun(rng, SUBJECTS), !well);
    }
    doc.push(VERBS.choose(rng).unwrap(), false);
    doc.push(noun(rng, OBJECTS), false);
    let c: f64 = rng.random();
    if c < priors.but_clause {
        doc.mark(PunctLabel::Comma);
        doc.push("but", false);
        doc.push(noun(rng, SUBJECTS), false);
        doc.push(VERBS.choose(rng).unwrap(), false);
        doc.push(noun(rng, OBJECTS), false);
    } else if c < priors.but_clause + priors.however_clause {
        doc.mark(PunctLabel::SemiColon);
        doc.push("however", false);
        doc.push(noun(rng, SUBJECTS), false);
        doc.push(VERBS.choose(rng).unwrap(), false);
        doc.push(noun(rng, OBJECTS), false);
    } else if c < priors.but_clause + priors.however_clause + priors.dash_clause {
        doc.mark(PunctLabel::DoubleDash);
        doc.push("then", false);
        doc.push(noun(rng, SUBJECTS), false);
        doc.push(VERBS.choose(rng).unwrap(), false);
        doc.push(noun(rng, OBJECTS), false);
    }
    doc.mark(if exclaim { PunctLabel::Exclamation } else { PunctLabel::FullStop });
}

/// Documents of one to `max_sentences` sentences drawn from a small grammar.
/// Casing depends on sentence position and a closed name/acronym list;
/// punctuation on sentence type, connectives and the "well..." opener.
/// Every class of both schemas occurs.
pub fn rule_corpus(n: usize, max_sentences: usize, priors: &Priors, seed: u64, tag: &str) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut doc = Doc::default();
            for _ in 0..rng.random_range(1..=max_sentences) {
                sentence(&mut rng, &mut doc, priors);
            }
            doc.finish(format!("{tag}{i}"))
        })
        .collect()
}

/// `count` distinct pseudo-words of two or three syllables.
pub fn pseudo_words(count: usize, seed: u64) -> Vec<String> {
    const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(count);
    while out.len() < count {
        let w: String = (0..rng.random_range(2..=3))
            .map(|_| format!("{}{}", ONSETS.choose(&mut rng).unwrap(), VOWELS.choose(&mut rng).unwrap()))
            .collect();
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// Documents of clauses "<opener> <noun>{1,3} <marker>" where the marker
/// class decides the clause's closing mark: a full stop or a semicolon. A
/// clause-initial "the" is capitalized exactly after a full stop, i.e. after
/// a marker of the first class. Openers are mostly names, which are
/// capitalized regardless, so casing labels reveal the class of a marker
/// only now and then while every clause end carries its mark. Acronyms
/// appear often among the nouns so every casing class is frequent.
pub fn boundary_corpus(n: usize, seed: u64, tag: &str) -> Vec<LabeledDocument> {
    let words = pseudo_words(40, 99);
    let (full, semi) = words.split_at(20);
    let nouns: &[&str] = &["cat", "dog", "tree", "house", "river", "stone", "bread", "city", "road", "song"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut doc = Doc::default();
            let mut after_full = true;
            for _ in 0..rng.random_range(3..=6) {
                if rng.random_bool(0.3) {
                    doc.push("the", after_full);
                } else {
                    doc.push(NAMES.choose(&mut rng).unwrap(), false);
                }
                for _ in 0..rng.random_range(1..=3) {
                    let filler = if rng.random_bool(0.2) { ACRONYMS } else { nouns };
                    doc.push(filler.choose(&mut rng).unwrap(), false);
                }
                let is_full = rng.random_bool(0.5);
                let marker = if is_full { full } else { semi };
                doc.push(marker.choose(&mut rng).unwrap(), false);
                doc.mark(if is_full { PunctLabel::FullStop } else { PunctLabel::SemiColon });
                after_full = is_full;
            }
            doc.finish(format!("{tag}{i}"))
        })
        .collect()
}

/// Punctuation drawn independently of the words; a word is capitalized
/// exactly when it opens the document or follows a full stop. Casing is
/// therefore predictable from the punctuation and from nothing else.
pub fn punct_cued_corpus(n: usize, seed: u64, tag: &str) -> Vec<LabeledDocument> {
    let words = pseudo_words(30, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut doc = Doc::default();
            let mut capital = true;
            for _ in 0..rng.random_range(8..=16) {
                doc.push(words.choose(&mut rng).unwrap(), capital);
                let p = match rng.random_range(0..10) {
                    0..=2 => PunctLabel::FullStop,
                    3..=4 => PunctLabel::Comma,
                    _ => PunctLabel::Blank,
                };
                doc.mark(p);
                capital = p == PunctLabel::FullStop;
            }
            doc.finish(format!("{tag}{i}"))
        })
        .collect()
}

/// A random document that satisfies every structural invariant and renders
/// back to itself: words mix letters (some non-ASCII), digits and internal
/// joiners, and casing labels only ask for what a word's letters allow.
pub fn random_document<R: Rng>(rng: &mut R, id: &str, max_words: usize) -> LabeledDocument {
    const LETTERS: &[char] = &[
        'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'k', 'l', 'm', 'n', 'o', 'p', 'r', 's', 't', 'u', 'w', 'y', 'z',
        'é', 'ü', 'ñ',
    ];
    const DIGITS: &[char] = &['0', '1', '7', '9'];
    let n = rng.random_range(0..=max_words);
    let mut doc = LabeledDocument { id: id.to_string(), ..Default::default() };
    for _ in 0..n {
        let mut word = String::new();
        for part in 0..rng.random_range(1..=3) {
            if part > 0 {
                word.push(if rng.random_bool(0.5) { '\'' } else { '-' });
            }
            for _ in 0..rng.random_range(1..=6) {
                let pool = if rng.random_bool(0.1) { DIGITS } else { LETTERS };
                word.push(*pool.choose(rng).unwrap());
            }
        }
        let letters = word.chars().filter(|c| c.is_lowercase()).count();
        let casing = match (letters, rng.random_range(0..3)) {
            (0, _) => CasingLabel::Lower,
            (1, 0) => CasingLabel::Upper,
            (_, 0) => CasingLabel::AllUpper,
            (_, 1) => CasingLabel::Upper,
            _ => CasingLabel::Lower,
        };
        let punct = if rng.random_bool(0.6) {
            PunctLabel::Blank
        } else {
            *[
                PunctLabel::FullStop,
                PunctLabel::Comma,
                PunctLabel::Question,
                PunctLabel::Exclamation,
                PunctLabel::SemiColon,
                PunctLabel::DoubleDash,
                PunctLabel::Ellipsis,
            ]
            .choose(rng)
            .unwrap()
        };
        doc.words.push(word);
        doc.casing.push(casing);
        doc.punct.push(punct);
    }
    doc.validate().expect("random document is valid");
    doc
}

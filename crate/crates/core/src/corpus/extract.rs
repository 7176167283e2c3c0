use crate::labels::{CasingLabel, PunctLabel};

use super::LabeledDocument;

/// Characters that may join two word characters without splitting the word.
fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Casing class of a surface word. Only characters that have case count:
/// two or more cased characters all uppercase is AUC, any other uppercase
/// presence is UC, and everything else (including digit-only words) is LC.
pub fn casing_of(word: &str) -> CasingLabel {
    let mut cased = 0usize;
    let mut upper = 0usize;
    for c in word.chars() {
        if c.is_uppercase() {
            cased += 1;
            upper += 1;
        } else if c.is_lowercase() {
            cased += 1;
        }
    }
    if upper == 0 {
        CasingLabel::Lower
    } else if upper == cased && cased >= 2 {
        CasingLabel::AllUpper
    } else {
        CasingLabel::Upper
    }
}

/// Applies a casing label to a lowercase word.
pub fn apply_casing(word: &str, casing: CasingLabel) -> String {
    match casing {
        CasingLabel::Lower => word.to_string(),
        CasingLabel::AllUpper => word.to_uppercase(),
        CasingLabel::Upper => {
            // Capitalize the first character that has case; for ordinary
            // words that is the first character.
            let mut out = String::with_capacity(word.len());
            let mut done = false;
            for c in word.chars() {
                if !done && c.is_lowercase() {
                    out.extend(c.to_uppercase());
                    done = true;
                } else {
                    out.push(c);
                }
            }
            out
        }
    }
}

/// Splits rich text into words and derives one casing and one punctuation
/// label per word.
///
/// A word is a maximal run of alphanumeric characters, possibly joined by
/// single internal apostrophes or hyphens. The punctuation label of a word is
/// the first schema mark found between it and the next word; marks before the
/// first word are dropped. Any other character is discarded.
pub fn extract_labels(raw: &str, doc_id: &str) -> LabeledDocument {
    let chars: Vec<char> = raw.chars().collect();
    let mut doc = LabeledDocument {
        id: doc_id.to_string(),
        ..Default::default()
    };
    // Punctuation for the most recent word, None until a mark is seen.
    let mut pending: Option<PunctLabel> = None;
    let mut i = 0;

    let flush = |doc: &mut LabeledDocument, pending: &mut Option<PunctLabel>| {
        if !doc.words.is_empty() {
            doc.punct.push(pending.take().unwrap_or(PunctLabel::Blank));
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) {
            flush(&mut doc, &mut pending);
            let start = i;
            i += 1;
            while i < chars.len() {
                if is_word_char(chars[i]) {
                    i += 1;
                } else if is_joiner(chars[i])
                    && i + 1 < chars.len()
                    && is_word_char(chars[i + 1])
                {
                    i += 2;
                } else {
                    break;
                }
            }
            let surface: String = chars[start..i].iter().collect();
            doc.casing.push(casing_of(&surface));
            doc.words.push(surface.to_lowercase());
            continue;
        }

        let run = chars[i..].iter().take_while(|&&x| x == c).count();
        let mark = match c {
            '.' if run >= 3 => Some(PunctLabel::Ellipsis),
            '.' => Some(PunctLabel::FullStop),
            '\u{2026}' => Some(PunctLabel::Ellipsis),
            '-' if run >= 2 => Some(PunctLabel::DoubleDash),
            '\u{2014}' => Some(PunctLabel::DoubleDash),
            ',' => Some(PunctLabel::Comma),
            '?' => Some(PunctLabel::Question),
            '!' => Some(PunctLabel::Exclamation),
            ';' => Some(PunctLabel::SemiColon),
            _ => None,
        };
        if let Some(mark) = mark {
            if !doc.words.is_empty() && pending.is_none() {
                pending = Some(mark);
            }
            i += run;
        } else {
            i += 1;
        }
    }
    flush(&mut doc, &mut pending);
    doc
}

/// Renders one word as it appears in text, optionally with its casing and
/// trailing punctuation mark.
pub fn render_word(
    word: &str,
    casing: CasingLabel,
    punct: PunctLabel,
    with_casing: bool,
    with_punct: bool,
) -> String {
    let mut out = if with_casing {
        apply_casing(word, casing)
    } else {
        word.to_string()
    };
    if with_punct {
        out.push_str(punct.mark());
    }
    out
}

/// Per-word rendered forms; joining them with single spaces gives [`render`].
pub fn render_words(doc: &LabeledDocument, with_casing: bool, with_punct: bool) -> Vec<String> {
    doc.words
        .iter()
        .zip(doc.casing.iter().zip(&doc.punct))
        .map(|(w, (&c, &p))| render_word(w, c, p, with_casing, with_punct))
        .collect()
}

/// Reconstructs surface text from a labeled document.
pub fn render(doc: &LabeledDocument, with_casing: bool, with_punct: bool) -> String {
    render_words(doc, with_casing, with_punct).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::CasingLabel::*;
    use crate::labels::PunctLabel::*;

    fn check(raw: &str, words: &[&str], casing: &[CasingLabel], punct: &[PunctLabel]) {
        let doc = extract_labels(raw, "d");
        assert_eq!(doc.words, words, "words of {raw:?}");
        assert_eq!(doc.casing, casing, "casing of {raw:?}");
        assert_eq!(doc.punct, punct, "punct of {raw:?}");
        doc.validate().unwrap();
    }

    #[test]
    fn hello_world() {
        check("Hello, world!", &["hello", "world"], &[Upper, Lower], &[Comma, Exclamation]);
    }

    #[test]
    fn acronym_ellipsis_and_double_dash() {
        check(
            "NASA launched... Then -- what?",
            &["nasa", "launched", "then", "what"],
            &[AllUpper, Lower, Upper, Lower],
            &[Blank, Ellipsis, DoubleDash, Question],
        );
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert!(extract_labels("", "e").is_empty());
        assert!(extract_labels("  ... -- ?! \"", "e").is_empty());
    }

    #[test]
    fn mixed_case_is_upper() {
        check(
            "iPhone sales; up.",
            &["iphone", "sales", "up"],
            &[Upper, Lower, Lower],
            &[Blank, SemiColon, FullStop],
        );
    }

    #[test]
    fn first_mark_wins() {
        check("What!? no", &["what", "no"], &[Upper, Lower], &[Exclamation, Blank]);
        check("so... , fine", &["so", "fine"], &[Lower, Lower], &[Ellipsis, Blank]);
    }

    #[test]
    fn one_letter_capitals_are_upper() {
        check("I am A.", &["i", "am", "a"], &[Upper, Lower, Upper], &[Blank, Blank, FullStop]);
    }

    #[test]
    fn internal_apostrophes_and_hyphens_are_kept() {
        check(
            "Don't be well-known--ok",
            &["don't", "be", "well-known", "ok"],
            &[Upper, Lower, Lower, Lower],
            &[Blank, Blank, DoubleDash, Blank],
        );
        // trailing apostrophe and a lone hyphen are stripped
        check("the students' - work", &["the", "students", "work"], &[Lower; 3], &[Blank; 3]);
    }

    #[test]
    fn non_schema_punctuation_is_stripped() {
        check(
            "He said: \"(yes)\" *really*",
            &["he", "said", "yes", "really"],
            &[Upper, Lower, Lower, Lower],
            &[Blank; 4],
        );
    }

    #[test]
    fn unicode_ellipsis_and_em_dash() {
        check("wait\u{2026} now\u{2014}go", &["wait", "now", "go"], &[Lower; 3], &[Ellipsis, DoubleDash, Blank]);
    }

    #[test]
    fn digits_are_lower_case() {
        check("In 1999, 42 Items", &["in", "1999", "42", "items"], &[Upper, Lower, Lower, Upper], &[Blank, Comma, Blank, Blank]);
        assert_eq!(casing_of("A1"), Upper);
        assert_eq!(casing_of("A1B"), AllUpper);
    }

    #[test]
    fn render_flags() {
        let doc = extract_labels("Hello, world!", "d");
        assert_eq!(render(&doc, true, true), "Hello, world!");
        assert_eq!(render(&doc, false, true), "hello, world!");
        assert_eq!(render(&doc, false, false), "hello world");
        assert_eq!(render(&doc, true, false), "Hello world");
    }

    #[test]
    fn render_upper_capitalizes_first_cased_character() {
        assert_eq!(apply_casing("1abc", Upper), "1Abc");
        assert_eq!(casing_of("1Abc"), Upper);
        assert_eq!(apply_casing("don't", AllUpper), "DON'T");
    }
}

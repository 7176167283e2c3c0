//! Label schemas for the two tagging tasks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A closed, ordered label set. The declaration order fixes the class index
/// used by the model heads, confusion matrices and argmax tie-breaking.
pub trait Label: Copy + Eq + Ord + fmt::Debug + 'static {
    const ALL: &'static [Self];
    const TASK: Task;

    fn index(self) -> usize;

    fn name(self) -> &'static str;

    fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    fn num_classes() -> usize {
        Self::ALL.len()
    }
}

/// Which of the two tagging tasks a report, matrix or head belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Casing,
    Punct,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Casing => CasingLabel::ALL.len(),
            Task::Punct => PunctLabel::ALL.len(),
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Task::Casing => CasingLabel::ALL.iter().map(|l| l.name()).collect(),
            Task::Punct => PunctLabel::ALL.iter().map(|l| l.name()).collect(),
        }
    }

    /// Index of a class name within this task's schema.
    pub fn class_index(self, name: &str) -> Option<usize> {
        self.class_names().iter().position(|n| *n == name)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Casing => "casing",
            Task::Punct => "punct",
        })
    }
}

/// Truecasing class of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CasingLabel {
    /// Every cased character is uppercase (acronyms).
    #[serde(rename = "AUC")]
    AllUpper,
    #[serde(rename = "LC")]
    Lower,
    /// Initial capital, or mixed casing.
    #[serde(rename = "UC")]
    Upper,
}

impl Label for CasingLabel {
    const ALL: &'static [Self] = &[CasingLabel::AllUpper, CasingLabel::Lower, CasingLabel::Upper];
    const TASK: Task = Task::Casing;

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            CasingLabel::AllUpper => "AUC",
            CasingLabel::Lower => "LC",
            CasingLabel::Upper => "UC",
        }
    }
}

/// Punctuation mark following a word, or `Blank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PunctLabel {
    Blank,
    FullStop,
    Comma,
    Question,
    Exclamation,
    SemiColon,
    DoubleDash,
    Ellipsis,
}

impl PunctLabel {
    /// Surface form appended after a word when rendering.
    pub fn mark(self) -> &'static str {
        match self {
            PunctLabel::Blank => "",
            PunctLabel::FullStop => ".",
            PunctLabel::Comma => ",",
            PunctLabel::Question => "?",
            PunctLabel::Exclamation => "!",
            PunctLabel::SemiColon => ";",
            PunctLabel::DoubleDash => "--",
            PunctLabel::Ellipsis => "...",
        }
    }
}

impl Label for PunctLabel {
    const ALL: &'static [Self] = &[
        PunctLabel::Blank,
        PunctLabel::FullStop,
        PunctLabel::Comma,
        PunctLabel::Question,
        PunctLabel::Exclamation,
        PunctLabel::SemiColon,
        PunctLabel::DoubleDash,
        PunctLabel::Ellipsis,
    ];
    const TASK: Task = Task::Punct;

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            PunctLabel::Blank => "Blank",
            PunctLabel::FullStop => "FullStop",
            PunctLabel::Comma => "Comma",
            PunctLabel::Question => "Question",
            PunctLabel::Exclamation => "Exclamation",
            PunctLabel::SemiColon => "SemiColon",
            PunctLabel::DoubleDash => "DoubleDash",
            PunctLabel::Ellipsis => "Ellipsis",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {task} label `{name}`")]
pub struct UnknownLabelName {
    pub task: Task,
    pub name: String,
}

impl FromStr for CasingLabel {
    type Err = UnknownLabelName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|l| l.name() == s).ok_or_else(|| UnknownLabelName {
            task: Task::Casing,
            name: s.to_string(),
        })
    }
}

impl FromStr for PunctLabel {
    type Err = UnknownLabelName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|l| l.name() == s).ok_or_else(|| UnknownLabelName {
            task: Task::Punct,
            name: s.to_string(),
        })
    }
}

impl fmt::Display for CasingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for PunctLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

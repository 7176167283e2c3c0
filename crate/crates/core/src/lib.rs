//! Joint truecasing and punctuation restoration.
//!
//! The crate covers the whole pipeline: label extraction from rich text
//! ([`corpus`]), subword vocabulary induction and first-subword alignment
//! ([`tokenizer`]), a small transformer encoder with two task heads and a
//! λ-weighted joint loss ([`model`]), Adam training with staged transfer and
//! sweeps ([`training`]), and Macro F1 scoring ([`eval`]).

pub mod corpus;
pub mod eval;
pub mod labels;
pub mod model;
pub mod tokenizer;
pub mod training;

pub use labels::{CasingLabel, Label, PunctLabel, Task};

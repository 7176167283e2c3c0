//! Error kinds, exit codes and the JSON record printed on failure.

use std::fmt;

use recase::corpus::CorpusError;
use recase::eval::EvalError;
use recase::model::ModelError;
use recase::tokenizer::TokenizerError;
use recase::training::TrainingError;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad flags, configuration or settings.
    Usage,
    /// Unreadable, malformed or unsuitable input data.
    Data,
    /// Anything else.
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Data, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Internal, message: message.into() }
    }

    /// Prefixes the message, keeping the kind.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { kind: self.kind, message: format!("{what}: {}", self.message) }
    }

    /// One-line JSON error record.
    pub fn record(&self, command: &str) -> String {
        json!({
            "error": {
                "kind": self.kind.name(),
                "exit_code": self.kind.exit_code(),
                "command": command,
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let kind = match e {
            CorpusError::InvalidRatios { .. } => ErrorKind::Usage,
            CorpusError::Eval(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<TokenizerError> for CliError {
    fn from(e: TokenizerError) -> Self {
        let kind = match e {
            TokenizerError::TargetTooSmall { .. } | TokenizerError::InvalidMaxLen(_) => ErrorKind::Usage,
            TokenizerError::AlignmentMismatch { .. } => ErrorKind::Internal,
            _ => ErrorKind::Data,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Tokenizer(t) => t.into(),
            ModelError::InvalidConfig(_) | ModelError::InvalidLambda(_) => CliError::usage(e.to_string()),
            ModelError::Checkpoint(_) | ModelError::Io(_) | ModelError::NoSupervisedTokens => {
                CliError::data(e.to_string())
            }
            _ => CliError::internal(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptyMatrix => CliError::data(e.to_string()),
            _ => CliError::internal(e.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        match e {
            TrainingError::InvalidConfig(_) | TrainingError::DistinctSettings(_) => CliError::usage(e.to_string()),
            TrainingError::EmptyTrainSet | TrainingError::VocabularyMismatch(_) | TrainingError::Metadata(_) => {
                CliError::data(e.to_string())
            }
            TrainingError::Diverged { .. } => CliError::internal(e.to_string()),
            TrainingError::Model(m) => m.into(),
            TrainingError::Tokenizer(t) => t.into(),
            TrainingError::Corpus(c) => c.into(),
            TrainingError::Eval(v) => v.into(),
        }
    }
}

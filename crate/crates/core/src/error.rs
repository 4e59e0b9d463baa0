use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed corpus line {0}")]
    MalformedLine(usize),

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("no ambiguous training positions, so there is nothing for a learner to train on")]
    EmptyVocabulary,

    #[error("position {position} is out of range for a sentence of {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("no training examples")]
    NoExamples,

    #[error("binary problem needs both +1 and -1 labels")]
    DegenerateProblem,

    #[error("pairwise training needs at least two distinct tags, found {0}")]
    SingleCategory(usize),

    #[error("unknown method `{0}` (expected baseline, dlist, maxent or svm)")]
    UnknownMethod(String),

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("token `{word}` in sentence {sentence} has no gold tag")]
    MissingGoldTags { sentence: usize, word: String },

    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model format version {found} is not supported (this build reads version {supported})")]
    FormatVersionMismatch { found: u32, supported: u32 },

    #[error("corrupt model in section `{section}`: {detail}")]
    CorruptModel { section: String, detail: String },
}

impl Error {
    pub(crate) fn corrupt(section: &str, detail: impl Into<String>) -> Self {
        Error::CorruptModel {
            section: section.to_string(),
            detail: detail.into(),
        }
    }
}

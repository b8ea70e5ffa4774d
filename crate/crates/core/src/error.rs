use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("hierarchical softmax needs at least 2 words, got {0}")]
    VocabularyTooSmall(usize),

    #[error("word frequencies must be positive (word id {0} has zero count)")]
    ZeroFrequency(usize),

    #[error("cannot merge word {0} with itself")]
    SelfMerge(String),

    #[error("word {0} appears in more than one merge")]
    OverlappingMerge(String),

    #[error("unknown word: {0}")]
    OutOfVocabulary(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {need} items, got {got}")]
    TooFewItems { need: usize, got: usize },

    #[error("vector for word {word} sense {sense} has zero norm")]
    ZeroNorm { word: u32, sense: usize },

    #[error("no pair has a nonempty context")]
    NoContext,

    #[error("no target word of the dataset is in the model vocabulary")]
    NoScoreableWords,

    #[error("non-finite parameter after pair {step} (word id {word})")]
    NonFinite { step: u64, word: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("model checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

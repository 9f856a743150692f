use alloc::string::String;

/// Crate-wide error type. Message strings are part of the CLI contract
/// (operators and tests match on them), so keep them stable.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty sequence")]
    EmptySequence,
    #[error("degenerate image")]
    DegenerateImage,
    #[error("invalid normalization")]
    InvalidNormalization,
    #[error("resolution/patch mismatch")]
    ResolutionPatchMismatch,
    #[error("shuffle factor mismatch")]
    ShuffleFactorMismatch,
    #[error("no valid tokens")]
    NoValidTokens,
    #[error("non-finite activation")]
    NonFiniteActivation,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch")]
    LengthMismatch,
    #[error("token id {0} exceeds vocabulary")]
    TokenOutOfVocab(u32),
    #[error("diverged")]
    Diverged,
    #[error("nothing to train")]
    NothingToTrain,
    #[error("degenerate validation set")]
    DegenerateValidationSet,
    #[error("zero variance")]
    ZeroVariance,
    #[error("zero rank variance")]
    ZeroRankVariance,
    #[error("n ≥ 2 required")]
    TooFewSamples,
    #[error("value out of range at index {0}")]
    OutOfRange(usize),
    #[error("too few records")]
    TooFewRecords,
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid architecture spec: {0}")]
    InvalidArchSpec(&'static str),
    #[error("invalid blob: {0}")]
    InvalidBlob(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

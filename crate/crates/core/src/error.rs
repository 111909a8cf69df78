use alloc::string::String;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: u32, size: usize },
    #[error("invalid story: {0}")]
    InvalidStory(String),
    #[error("invalid album: {0}")]
    InvalidAlbum(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("optimizer step counter must start at 1")]
    ZeroStep,
    #[error("enumerable space has {size} elements, above the cap of {cap}")]
    SpaceTooLarge { size: usize, cap: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("ratio undefined: neither token set occurs in the corpus")]
    RatioUndefined,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;

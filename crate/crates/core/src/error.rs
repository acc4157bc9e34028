use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("could not draw a distinct codeword for index {index} after {retries} retries")]
    DuplicateCodeword { index: usize, retries: usize },

    #[error("frame overload: {active} active users but only {codewords} codewords")]
    FrameOverload { active: usize, codewords: usize },

    #[error("decoder state inconsistent: {0}")]
    Inconsistent(String),

    #[error("codebook property violated: {0}")]
    CodebookProperty(String),

    #[error("oracle enumeration too large: {subsets} subsets exceeds {limit}")]
    OracleTooLarge { subsets: u128, limit: u128 },

    #[error("decoder returned a codeword that was not transmitted: {0}")]
    Unsound(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}

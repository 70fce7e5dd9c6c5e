use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("not a chain map: {0}")]
    NotChainMap(String),
    #[error("not a cocycle: {0}")]
    NotCocycle(String),
    #[error("object mismatch: {0}")]
    ObjectMismatch(String),
    #[error("composition undefined under the current choice: {0}")]
    Undefined(String),
    #[error("family not directed: {0}")]
    NotDirected(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

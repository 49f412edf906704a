//! Crate-wide error type.

/// Errors surfaced by the laboratory operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Requested sizes overflow the supported coefficient budget.
    #[error("size error: {0}")]
    Size(String),

    /// Parameters outside the mathematical domain of an operation
    /// (e.g. `α > d(1/2 − 1/p)₊` violated).
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched shapes or incompatible space specifications.
    #[error("shape error: {0}")]
    Shape(String),

    /// A structurally valid request that this configuration cannot serve,
    /// e.g. a code length below the scheme minimum.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or truncated serialized payloads.
    #[error("decode error: {0}")]
    Decode(String),

    /// An entry does not lie on the required quantization grid.
    #[error("quantization error: {0}")]
    Quantization(String),

    /// A coefficient index outside its declared index set.
    #[error("index error: {0}")]
    Index(String),
}

pub type Result<T> = std::result::Result<T, Error>;

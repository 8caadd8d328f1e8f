//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or truncated audio container.
    #[error("decode error: {0}")]
    Decode(String),

    /// Well-formed container holding a format this pipeline does not read.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// Manifest CSV failed to parse or validate.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// Dataset assembly produced nothing usable.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Inconsistent feature or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Feature extraction produced non-finite values.
    #[error("extraction error: {0}")]
    Extraction(String),

    /// Training preconditions violated (degenerate labels, non-finite data).
    #[error("train error: {0}")]
    Train(String),

    /// Prediction-time contract violation (dimension mismatch, bad model file).
    #[error("predict error: {0}")]
    Predict(String),

    /// Evaluation input mismatch.
    #[error("eval error: {0}")]
    Eval(String),

    /// Synthetic-corpus generation failed.
    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

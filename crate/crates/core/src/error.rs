use thiserror::Error;

/// Errors raised by the detection pipeline and the evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The input carries no usable symmetry evidence (featureless image,
    /// all-zero weights, empty or all-zero density).
    #[error("no symmetry evidence: {0}")]
    NoEvidence(String),
    #[error("degenerate pair: coincident feature positions")]
    DegeneratePair,
    #[error("degenerate axis extent: supporting features project to a single point")]
    DegenerateExtent,
    #[error("invalid benchmark: {0}")]
    InvalidBenchmark(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

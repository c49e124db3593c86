use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rejection budget of {0} attempts exhausted")]
    RejectionExhausted(usize),
    #[error("BP contradiction on arc {source_vertex}->{target}: every color is forbidden")]
    Contradiction { source_vertex: usize, target: usize },
    #[error("zero normalizer on arc {source_vertex}->{target}")]
    ZeroDenominator { source_vertex: usize, target: usize },
    #[error("the linear analysis needs d >= 8, got d = {0}")]
    DegreeTooSmall(usize),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("eigenvector residual {0:e} above tolerance; graph is not planted-regular")]
    EigenResidual(f64),
    #[error("spectral clustering produced {0} groups instead of 3")]
    ClusteringFailed(usize),
    #[error("||Xi||_inf did not exceed epsilon within {0} iterations")]
    NoCrossing(usize),
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_line(self, line: usize) -> Error {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

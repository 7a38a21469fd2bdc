//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node count {0} outside supported range {1}..={2}")]
    NodeCountOutOfRange(usize, usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("MCMC divergence: {0}")]
    McmcDivergence(String),

    #[error("score table has no entry for node {node} with parents {parents:?}")]
    UncoveredParentSet { node: usize, parents: Vec<usize> },

    #[error("score computation failed for node {node} with parents {parents:?}: {source}")]
    LocalScore {
        node: usize,
        parents: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("csv parse error at row {row}, column {col}: {msg}")]
    CsvParse { row: usize, col: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach (node, parents) context to a local-score failure.
    pub fn with_score_context(self, node: usize, parents: &[usize]) -> Error {
        Error::LocalScore {
            node,
            parents: parents.to_vec(),
            source: Box::new(self),
        }
    }
}

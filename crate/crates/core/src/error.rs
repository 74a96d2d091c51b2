use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: node index out of range: {index} >= {num_nodes}")]
    NodeOutOfRange {
        path: PathBuf,
        line: usize,
        index: usize,
        num_nodes: usize,
    },

    #[error("{path}:{line}: ragged feature row: expected {expected} columns, found {found}")]
    RaggedFeatures {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("feature index {index} out of range for {num_features} features")]
    FeatureOutOfRange { index: usize, num_features: usize },

    #[error("{0} must lie in [0, 1], got {1}")]
    FractionOutOfRange(&'static str, f64),

    #[error("ranking required for influential selection")]
    RankingRequired,

    #[error("starting position required for influential selection")]
    PositionRequired,

    #[error("ranking covers {found} features, graph has {expected}")]
    RankingSize { expected: usize, found: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { what: &'static str, epoch: usize },

    #[error("training diverged at epoch {epoch} after {} finite losses", trace.len())]
    Diverged { epoch: usize, trace: Vec<f64> },

    #[error("training set holds a single class")]
    SingleClass,

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("empty input")]
    EmptyInput,

    #[error("labels required")]
    LabelsRequired,

    #[error("scorer failed at round {round}, feature {feature}: {source}")]
    Scorer {
        round: usize,
        feature: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

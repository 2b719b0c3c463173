use thiserror::Error;

/// Errors produced by the clustering pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum DlccError {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("covariance matrix is singular or ill-conditioned; fall back to the identity model")]
    SingularCovariance,

    #[error(
        "EEV fit degenerate for every candidate component count; use the global or identity model"
    )]
    EevDegenerate,

    #[error("duplicate observations at index pairs {pairs:?}; jitter or deduplicate the input")]
    DuplicateRows { pairs: Vec<(usize, usize)> },

    #[error("neighborhood size {s} out of range [2, {n}]")]
    NeighborhoodSize { s: usize, n: usize },

    #[error("no local centers survive filtering at s = {s}; try a different neighborhood size")]
    NoCenters { s: usize },

    #[error("cannot reach K = {k} groups: {reason}")]
    UnsatisfiableK { k: usize, reason: String },

    #[error("cluster {cluster} has {size} points, fewer than the minimum {min}")]
    ClusterTooSmall {
        cluster: usize,
        size: usize,
        min: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("similarity cache: {0}")]
    Cache(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<DlccError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DlccError {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(DlccError) -> DlccError {
        move |e| DlccError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, DlccError>;

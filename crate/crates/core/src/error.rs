use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),
    #[error("point is not on the manifold: {0}")]
    NotOnManifold(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("window [{t1}, {t2}] is not covered by the schedule ({coverage})")]
    ScheduleCoverage { t1: f64, t2: f64, coverage: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("retraction failed: {0}")]
    Retraction(String),
    #[error("rank test failed: {0}")]
    Rank(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("estimator variables are required for this flow")]
    MissingEstimators,
    #[error("relative attitude for edge {from} -> {to} is missing")]
    MissingRelativePosition { from: usize, to: usize },
    #[error("invalid flow parameters: {0}")]
    InvalidFlow(String),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}

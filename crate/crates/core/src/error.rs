use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("invalid dataset: {}", .0.join("; "))]
    InvalidDataset(Vec<String>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("empty negative component: every beta equals 1")]
    EmptyNegativeComponent,

    #[error("projection infeasible for c = {0}")]
    InfeasibleProjection(f64),

    #[error("no knee detected: curve is flat")]
    NoKnee,

    #[error("EM degenerate on every restart ({0} restarts)")]
    EmDegenerate(usize),

    #[error("tau must be < 1, got {0}")]
    TauOutOfRange(f64),

    #[error("multivariate input requires transform")]
    TransformRequired,

    #[error("benchmark spec: {0}")]
    BenchSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

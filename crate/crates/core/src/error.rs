//! Error types shared across the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors produced by tensor math, transforms, training, and data generation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported Daubechies order {0} (supported: 1..=10)")]
    UnsupportedWaveletOrder(usize),

    #[error(
        "too many wavelet levels: level {level} sees extent {extent} \
         (need even extent >= filter length {filter_len})"
    )]
    TooManyLevels {
        level: usize,
        extent: usize,
        filter_len: usize,
    },

    #[error("inconsistent wavelet coefficients: {0}")]
    InconsistentCoeffs(String),

    #[error("backward requires a scalar loss, got shape {0:?}")]
    LossNotScalar(Vec<usize>),

    #[error("backward on an empty tape")]
    EmptyTape,

    #[error("optimizer state does not match parameters: {0}")]
    OptimizerStateMismatch(String),

    #[error("relative L2 loss: zero-norm truth at sample {sample}")]
    ZeroNormTruth { sample: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("member {member} failed: {source}")]
    MemberFailed {
        member: usize,
        #[source]
        source: Box<CoreError>,
    },

    #[error("prior cache holds {cache} samples but dataset has {dataset}")]
    CacheSizeMismatch { cache: usize, dataset: usize },

    #[error("conjugate gradient did not converge: residual {residual:e} after {iters} iterations")]
    CgNoConvergence { iters: usize, residual: f64 },

    #[error("solver produced a non-finite state at time step {step}")]
    SolverNonFinite { step: usize },

    #[error("sample {sample}: {source}")]
    SampleFailed {
        sample: usize,
        #[source]
        source: Box<CoreError>,
    },

    #[error("dataset container: {0}")]
    BadContainer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("metadata encoding: {0}")]
    Json(#[from] serde_json::Error),
}

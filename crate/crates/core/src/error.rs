//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time integration failed to converge at t = {time:.6} s (sample {sample:?}): {detail}")]
    NonConvergence {
        time: f64,
        sample: Option<u64>,
        detail: String,
    },

    #[error("stratum {stratum} pool exhausted: requested {requested}, {available} undrawn indices left")]
    PoolExhausted {
        stratum: usize,
        requested: usize,
        available: usize,
    },

    #[error("stratification variable evaluation failed at sample {index}: {source}")]
    SvEvaluation {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("empty stratum {stratum} under the chosen boundary rule")]
    EmptyStratum { stratum: usize },

    #[error("adaptive training did not reach targets within {max_iterations} iterations; trajectory: {trajectory:?}")]
    AdaptiveTargetsUnreached {
        max_iterations: usize,
        /// Per-iteration (total samples, mean correlation, correlation COV).
        trajectory: Vec<(usize, f64, f64)>,
    },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("estimator input invalid: {0}")]
    Estimator(String),

    #[error("unbounded optimal LF/HF ratio at |rho| = 1; cap the correlation below 1")]
    UnboundedRatio,

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(
        "artifact {path} was produced under config hash {found} but the current config hashes to {expected}; \
         rerun upstream stages or pass --force"
    )]
    ConfigHashMismatch {
        path: String,
        expected: String,
        found: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

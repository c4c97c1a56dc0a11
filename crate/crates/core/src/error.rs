use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-manifold edge ({0}, {1}) shared by {2} faces")]
    NonManifold(usize, usize, usize),

    #[error("degenerate face {0}")]
    DegenerateFace(usize),

    #[error("singular edge metric at face {0}")]
    SingularMetric(usize),

    #[error("too few points: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("filter does not match decomposition: {0}")]
    FilterShapeMismatch(String),

    #[error("correspondence index {index} out of range for {len} source elements")]
    MapOutOfRange { index: usize, len: usize },

    #[error("channel mismatch: source has {source_channels}, target has {target_channels}")]
    ChannelMismatch {
        source_channels: usize,
        target_channels: usize,
    },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("explicit step {step} is unstable (relative change {ratio:.3})")]
    Instability { step: usize, ratio: f64 },

    #[error("digest mismatch: {0}")]
    DigestMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

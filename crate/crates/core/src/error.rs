use thiserror::Error;

/// Everything that can go wrong while building or evaluating a sensor network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("network must contain at least one mode")]
    EmptyNetwork,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid rate: {name} = {value} on mode {mode}")]
    InvalidRate {
        mode: usize,
        name: &'static str,
        value: f64,
    },
    #[error("drive has no nonzero input amplitude")]
    ZeroDrive,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("network is not below threshold (decay margin {margin:e} <= {threshold:e})")]
    AboveThreshold { margin: f64, threshold: f64 },
    #[error("near-singular response: |det chi| = {det:e} below floor {floor:e}")]
    NearSingular { det: f64, floor: f64 },
    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),
    #[error("averaging-time contract violated: tau = {tau:e} < {required:e}")]
    AveragingTime { tau: f64, required: f64 },
    #[error("insensitive port {port}: response magnitude {magnitude:e}")]
    InsensitivePort { port: usize, magnitude: f64 },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("simulation config: {0}")]
    SimConfig(String),
    #[error("insufficient trajectory length: {0}")]
    TrajectoryLength(String),
}

impl Error {
    /// True for failures caused by the physics of the requested evaluation
    /// (instability, singular response, insensitive port) as opposed to bad input.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::AboveThreshold { .. }
                | Error::NearSingular { .. }
                | Error::EigenSolver(_)
                | Error::InsensitivePort { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

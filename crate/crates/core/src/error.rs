use thiserror::Error;

/// Failure modes of the co-design toolkit.
#[derive(Debug, Error)]
pub enum CcdError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("mass matrix is singular")]
    SingularMass,

    #[error("frequency response evaluation failed at omega = {omega} rad/s (resolvent singular)")]
    Evaluation { omega: f64 },

    #[error("algebraic loop: I + D_G D_K is singular")]
    AlgebraicLoop,

    #[error("system is unstable; the H-infinity norm is undefined")]
    Unstable,

    #[error("no stabilizing controller found for gamma in [{lower}, {upper}]")]
    Infeasible { lower: f64, upper: f64 },

    #[error("sensitivity never reaches -3 dB in [{lower}, {upper}] rad/s")]
    NoCrossing { lower: f64, upper: f64 },

    #[error("sensitivity already at or above -3 dB at the start of the search range ({omega} rad/s)")]
    DegenerateStart { omega: f64 },

    #[error("non-transversal bandwidth crossing: |d sigma / d omega| = {slope:e}")]
    FlatCrossing { slope: f64 },

    #[error("return difference I + G K is singular at omega = {omega} rad/s")]
    SingularReturnDifference { omega: f64 },

    #[error("no feasible (omega_S, omega_T) grid point among {} candidates", records.len())]
    InnerInfeasible { records: Vec<crate::inner::SweepRecord> },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("model has {available} modes of the requested kind, {requested} requested")]
    InsufficientModes { requested: usize, available: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = CcdError> = std::result::Result<T, E>;

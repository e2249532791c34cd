use thiserror::Error;

use crate::lowrank::LowRankSphereFun;

/// Errors raised by the sphere toolkit.
#[derive(Debug, Error)]
pub enum SphereError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("grid is not block-mirror-centrosymmetric (mismatch {mismatch:.3e} > {allowed:.3e})")]
    Structure { mismatch: f64, allowed: f64 },

    #[error("no valid pivot: both pivot values vanish")]
    Pivot,

    #[error("pivot index ({row}, {col}) outside the {rows}x{cols} grid or its [0,pi]^2 block")]
    Index {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("function not resolved: {reason}")]
    Unresolved {
        reason: String,
        best: Box<LowRankSphereFun>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular system for azimuthal mode {mode}")]
    Singular { mode: i64 },
}

pub type Result<T> = std::result::Result<T, SphereError>;

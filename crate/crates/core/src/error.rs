use alloc::boxed::Box;
use alloc::string::String;

use crate::types::RingPolymerState;

/// Errors raised by the simulation core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("integration failed at t = {time}: {reason}")]
    Integration {
        time: f64,
        reason: String,
        /// State at the start of the failed step, kept for post-mortem inspection.
        state: Box<RingPolymerState>,
    },

    #[error("time step too large: {0}")]
    StepSize(String),

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("branch {branch}: {source}")]
    Branch {
        branch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("misaligned branch time grids: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

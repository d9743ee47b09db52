//! Error type shared across the library.

use thiserror::Error;

/// Everything that can go wrong while building spaces, operators, or
/// propagating states.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// The protocol stores one photon per polarization; a truncation of
    /// zero photons cannot represent it.
    #[error("photon truncation n_max = 0 cannot represent the protocol (one photon per mode is required); use n_max >= 1")]
    TruncationTooSmall,

    #[error("photon occupation {occupation} exceeds the truncation n_max = {n_max}")]
    OccupationOutOfRange { occupation: usize, n_max: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("states live in different spaces (n_max {0} vs {1})")]
    SpaceMismatch(usize, usize),

    #[error("operator dimension {got} does not match space dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid propagation request: {0}")]
    InvalidRequest(String),

    /// Adaptive stepping shrank the step below the representable floor.
    /// Reports how far the integration got before giving up.
    #[error("step size underflow at t = {t_reached:.6e} (h = {step:.3e}): {cause}")]
    StepUnderflow {
        t_reached: f64,
        step: f64,
        cause: String,
    },

    /// A stage-B closed form was requested from a hand-off state that does
    /// not have the shape the formulas assume.
    #[error("stage-A hand-off inconsistent with the {variant} variant: {detail}")]
    HandoffMismatch { variant: String, detail: String },

    /// Propagation failure annotated with the protocol stage and the time
    /// (measured from the stage start) at which it occurred.
    #[error("propagation failed in stage {stage} at stage time {t:.6}: {source}")]
    StageFailure {
        stage: char,
        t: f64,
        #[source]
        source: Box<SimError>,
    },
}

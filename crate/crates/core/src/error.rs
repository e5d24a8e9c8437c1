use thiserror::Error;

/// Errors raised by model, solver, calibration and sampling routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("effort {0} is outside [0, 1]")]
    EffortOutOfRange(f64),

    #[error("invalid `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("agent index {index} out of range for {n} agents")]
    AgentIndex { index: usize, n: usize },

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(&'static str),

    #[error("need at least {min} records, got {got}")]
    InsufficientData { min: usize, got: usize },

    #[error("all investments are identical; slope is undefined")]
    DegenerateInvestments,

    #[error("required quality equals the state-of-the-art quality ({0}); scaling divides by zero")]
    RequirementEqualsBaseline(f64),

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("estimator received an empty sample")]
    EmptySample,

    #[error("sample of size {n} cannot fill a bin of size {bin_size}")]
    InsufficientSamples { n: usize, bin_size: usize },

    #[error("schedule was built for {expected} samples but the estimator received {actual}")]
    HorizonMismatch { expected: usize, actual: usize },

    #[error("quadrature did not converge on [{lower}, {upper}] (estimated error {error:e} after {evaluations} evaluations)")]
    QuadratureNonConvergence {
        lower: f64,
        upper: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("target {target} is not attainable: {reason}")]
    Unattainable { target: f64, reason: String },

    #[error("cutoff {cutoff} gives chi1 = {chi1}, outside (0, 1); smallest admissible cutoff is about {min_admissible}")]
    InadmissibleCutoff {
        cutoff: f64,
        chi1: f64,
        min_admissible: f64,
    },

    #[error("budget T = {budget} is too small for {arms} arms under the {schedule} schedule")]
    BudgetTooSmall {
        budget: u64,
        arms: usize,
        schedule: &'static str,
    },

    #[error("invalid phase schedule: {0}")]
    InvalidSchedule(String),

    #[error("instance is not identifiable: arms {first} and {second} share the optimal objective")]
    NotIdentifiable { first: usize, second: usize },

    #[error("non-finite estimate for arm {arm} in phase {phase}")]
    NonFiniteEstimate { arm: usize, phase: usize },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

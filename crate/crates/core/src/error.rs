use thiserror::Error;

/// Crate-wide error type.
///
/// Validation variants (`Dimension`, `Simplex`, `Param`, ...) signal a bad
/// configuration; `Integration`, `NonPositiveFitness` and `NegativePayoff`
/// signal failures while a run is in progress.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("{field}: {detail}")]
    Simplex { field: String, detail: String },

    #[error("{field}: entries must be finite")]
    NonFinite { field: String },

    #[error("noise: must lie in [0, 0.5], got {0}")]
    NoiseRange(f64),

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error(
        "pure-strategy space has {needed} elements, exceeding the cap {cap}; \
         use behavioral dynamics instead of population enumeration"
    )]
    EnumerationCap { needed: u128, cap: u64 },

    #[error("mean fitness {0} is not positive after offset; check payoffs")]
    NonPositiveFitness(f64),

    #[error("integration failed at step {step}: {detail}")]
    Integration { step: usize, detail: String },

    #[error("realized payoff {0} is negative; offset payoffs to be non-negative before reinforcement")]
    NegativePayoff(f64),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("window of {window} samples exceeds trajectory length {len}")]
    Window { window: usize, len: usize },

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("communication success undefined: {n_acts} acts cannot index {n_states} states")]
    ActsUndefined { n_states: usize, n_acts: usize },

    #[error("{field}: {detail}")]
    Param { field: String, detail: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid inputs or configuration, as opposed
    /// to failures during a run.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::NonPositiveFitness(_)
                | Error::Integration { .. }
                | Error::NegativePayoff(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

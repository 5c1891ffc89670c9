use thiserror::Error;

use crate::inference::{GammaParams, MixtureParams};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an input value or configuration was violated.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A special function was evaluated outside its domain.
    #[error("{function} is undefined for x = {x}")]
    Domain { function: &'static str, x: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Gradient descent produced a non-finite objective. Carries the last
    /// parameter set whose NLL was finite.
    #[error("optimisation diverged at iteration {iteration}")]
    Optimization {
        iteration: usize,
        last_valid: Box<MixtureParams>,
        last_nll: f64,
    },

    #[error("Gibbs sampler failed at iteration {iteration} (alpha = {}, beta = {}): {reason}", state.shape, state.rate)]
    Sampler {
        iteration: usize,
        state: GammaParams,
        reason: String,
    },

    #[error("malformed RD map file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

use thiserror::Error;

/// Errors raised by the solver and its drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable flow relaxation rate {omega_dt} (must lie in (0, 2)); admissible permeability range is kappa > 0 with {hint}")]
    Stability { omega_dt: f64, hint: String },

    #[error("singular moment coefficient: 12(lambda + mu) = 4 (lambda + mu = {sum})")]
    SingularCoefficient { sum: f64 },

    #[error("solver diverged at t = {t}, pseudo-step {tau}: field `{field}` {reason}")]
    Divergence {
        t: f64,
        tau: usize,
        field: String,
        reason: String,
    },

    #[error("boundary configuration error: {0}")]
    Boundary(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

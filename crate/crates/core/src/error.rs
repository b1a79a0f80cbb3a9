use thiserror::Error;

/// Errors raised by the simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid control for agent {agent}: non-finite component")]
    InvalidControl { agent: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("target {target} moved {displacement:.6} m at step {k}, above its max speed {max_speed:.6} m/step")]
    SpeedViolation {
        target: usize,
        k: u64,
        displacement: f64,
        max_speed: f64,
    },

    #[error("fuzzy basis is degenerate for input delta_psi = {delta_psi:e}")]
    DegenerateBasis { delta_psi: f64 },

    #[error("weight adaptation diverged at step {k} (residual {residual})")]
    AdaptationDiverged { k: u64, residual: f64 },

    #[error("covariance lost positive definiteness (min eigenvalue {min_eigenvalue:e})")]
    CovarianceDegenerate { min_eigenvalue: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

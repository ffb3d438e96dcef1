use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Solver non-convergence that still produces a usable iterate is reported
/// through the solver reports instead; these variants cover the cases where
/// no meaningful result exists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("adaptive quadrature did not converge for F({at}) (estimated error {error:e})")]
    QuadratureNonConvergence { at: f64, error: f64 },

    #[error("field mass {mass} is not 1 within {tolerance:e}")]
    NotUnitMass { mass: f64, tolerance: f64 },

    #[error("fiber derivative has no sign change on t in [{t_min}, {t_max}]")]
    FiberBracket { t_min: f64, t_max: f64 },

    #[error("shooting bracket not found for central value in (0, {w_max}]")]
    ShootingBracket { w_max: f64 },

    #[error("ODE integration failed at r = {r}: {reason}")]
    Integration { r: f64, reason: String },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("translation Newton iteration failed to converge in {iterations} steps")]
    RecenterBasin { iterations: usize },

    #[error("field not decayed at the box boundary: |u| = {boundary:e} vs max {peak:e}")]
    DecayViolation { boundary: f64, peak: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed field data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> LabError {
    LabError::InvalidParameter { name, reason: reason.into() }
}

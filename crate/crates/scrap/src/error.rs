use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Stark width sigma_s = 0; the analytic pulse is a delta spike and must
    /// never be evaluated or integrated.
    #[error("degenerate Stark width: sigma_s = 0")]
    DegenerateWidth,

    /// Both controls vanish, so the adiabatic basis is undefined.
    #[error("conical intersection: delta = omega = 0")]
    ConicalIntersection,

    /// Control sample carries no time derivatives but the operation needs them.
    #[error("control sample lacks time derivatives")]
    MissingDerivatives,

    /// Adaptive step fell below the representable step size.
    #[error("step size underflow at t = {t:.6e}; tolerances too tight or system too stiff")]
    StepUnderflow { t: f64 },

    /// Invalid pulse or integrator parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Position outside the configured inhomogeneity window.
    #[error("z = {z} outside window [{z_min}, {z_max}]")]
    OutsideWindow { z: f64, z_min: f64, z_max: f64 },

    /// Adjacent path samples subtend an angle >= pi at the origin; the winding
    /// increment is ambiguous and the path needs more samples.
    #[error("path under-resolved: segment {segment} subtends {step:.4} rad at the origin")]
    RefinementNeeded { segment: usize, step: f64 },

    /// Operation preconditions not met by the supplied trajectory.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Every shooting guess diverged or stalled.
    #[error("shooting failed: no guess converged (best residual {best_residual:.3e} from guess {best_guess})")]
    ShootingFailed {
        best_residual: f64,
        best_guess: usize,
        diagnostics: Vec<crate::pmp::GuessDiagnostic>,
    },

    /// Bad run configuration (CLI layer).
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Too many grid cells failed for the sweep to count as a success.
    #[error("{failed} of {total} cells failed (tolerated: {tolerated})")]
    TooManyFailures { failed: usize, total: usize, tolerated: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

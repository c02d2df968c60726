//! Error type shared by every module.

use crate::C64;

/// Failures reported by the library. Variants are grouped by the module that raises them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid torus: {0}")]
    InvalidTorus(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty-set distance undefined")]
    EmptySet,
    #[error("dyadic level {level} too large for {points} points per axis")]
    LevelTooLarge { level: u32, points: usize },
    #[error("malformed field record: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("nilpotency violated: generators {j},{k} anticommutator norm {norm:.3e}")]
    Nilpotency { j: usize, k: usize, norm: f64 },
    #[error("coercivity violated at xi = {xi:?} (ratio {ratio:.3e})")]
    Coercivity { xi: Vec<f64>, ratio: f64 },
    #[error("perturbation not accretive on sampled range ({which}: kappa = {kappa:.3e}, omega = {omega:.3})")]
    Accretivity { which: &'static str, kappa: f64, omega: f64 },
    #[error("ellipticity audit failed: {0}")]
    Ellipticity(String),
    #[error("structural condition violated: {which} residual {residual:.3e}")]
    Structural { which: &'static str, residual: f64 },

    #[error("resolvent solve failed (shift {shift}, residual {residual:.3e} after {iterations} iterations)")]
    SolveFailed { shift: C64, residual: f64, iterations: usize },
    #[error("solver mode unavailable: {0}")]
    SolverMode(String),
    #[error("null projection did not stabilize (difference {difference:.3e})")]
    NullProjection { difference: f64 },
    #[error("input outside the range of Gamma (residual {residual:.3e})")]
    OutsideRange { residual: f64 },

    #[error("contour quadrature not converged (refinement change {change:.3e})")]
    Quadrature { change: f64 },
    #[error("sgn undefined on null space input (null component {null:.3e}); sgn(0) = 0 needs the projected variant")]
    SgnNullInput { null: f64 },
    #[error("regularised calculus did not converge (last difference {difference:.3e})")]
    Regularization { difference: f64 },

    #[error("aperture window overflow: alpha * t_max = {reach} exceeds half period {half}")]
    Aperture { reach: f64, half: f64 },
    #[error("time {0} outside dyadic range")]
    DyadicRange(f64),

    #[error("decay below noise floor; order lower bound {lower_bound:.2}")]
    BelowNoiseFloor { lower_bound: f64 },
    #[error("dense oracle: {0}")]
    Oracle(String),
    #[error("invariant violated: {what} error {value:.3e} exceeds {tol:.1e}")]
    Invariant { what: String, value: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

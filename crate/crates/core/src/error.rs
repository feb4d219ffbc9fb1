use thiserror::Error;

/// Errors raised by the model, solvers and integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("potential family `{0}` has no pointwise value")]
    UnsupportedEvaluation(&'static str),

    #[error("field is in {found} space, expected {expected} space")]
    SpaceMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-posed elliptic problem: {0}")]
    IllPosed(String),

    #[error("zero mode of the source is {value:e}; request zero-mode projection to proceed")]
    ZeroMode { value: f64 },

    #[error(
        "speed {speed:e} is at or above the critical speed {critical:e}; a positive absorption parameter is required"
    )]
    Resonance { speed: f64, critical: f64 },

    #[error("resonance surface spans {modes:.1} grid modes, at least {required} are needed")]
    Resolution { modes: f64, required: usize },

    #[error("epsilon extrapolation is not monotone; raw samples (epsilon, force): {samples:?}")]
    Extrapolation { samples: Vec<(f64, f64)> },

    #[error("response curve shape: {0}")]
    CurveShape(String),

    #[error("force magnitude must be non-negative, got {0:e}")]
    NegativeForce(f64),

    #[error("time step {dt:e} violates the particle drift bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value detected at t = {t:e}")]
    NonFinite { t: f64 },

    #[error("energy is not conserved while the sponge layer is active")]
    SpongeActive,

    #[error("sponge layer configuration: {0}")]
    Sponge(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("adaptive integrator failed to meet tolerance at t = {t:e} (step {step:e})")]
    Tolerance { t: f64, step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

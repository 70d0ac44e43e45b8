use thiserror::Error;

/// Errors raised by evaluators, builders and integrators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The point (or a finite-difference stencil around it) left the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Lamé coefficient fell below the degeneracy threshold.
    #[error("degenerate Lamé coefficient H_{index} = {value:e} (threshold {threshold:e})")]
    Degenerate {
        index: usize,
        value: f64,
        threshold: f64,
    },

    #[error("pole proximity: z = {z} is within {guard:e} of the singular point {pole}")]
    Pole { z: f64, pole: f64, guard: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("step size underflow at z = {z} (h = {h:e})")]
    StepUnderflow { z: f64, h: f64 },

    #[error("invariant drift {drift:e} exceeds bound {bound:e} at z = {z}")]
    Drift { z: f64, drift: f64, bound: f64 },

    #[error("branch error: {0}")]
    Branch(String),

    #[error("degenerate reconstruction constants: {0}")]
    DegenerateConstants(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("z = {z} outside the trajectory range [{lo}, {hi}]")]
    OutOfRange { z: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

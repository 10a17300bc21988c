use thiserror::Error;

/// Errors produced by the wave-packet library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("|kz| = {kz:.4} is outside the first-order field expansion (limit {limit})")]
    ValidityDomainExceeded { kz: f64, limit: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("step size {dt} exceeds T_carrier/100 = {max}")]
    StepSizeTooLarge { dt: f64, max: f64 },

    #[error("axially symmetric packet required (dp_tilde_x = {dp_x}, dp_tilde_z = {dp_z})")]
    AxialSymmetryRequired { dp_x: f64, dp_z: f64 },

    #[error("{quantity}: scaling ratio {ratio:.3} outside [{lo}, {hi}]")]
    ScalingViolation {
        quantity: String,
        ratio: f64,
        lo: f64,
        hi: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

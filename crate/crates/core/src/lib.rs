//! Dynamics of a free electron wave packet in an intense, ultrashort
//! plane-wave laser pulse, to first order in `kz` and `1/c`.
//!
//! Atomic units throughout. The vector potential points along x and the
//! pulse propagates along z.

pub mod cache;
pub mod classical;
pub mod error;
pub mod oracle;
pub mod packet;
pub mod pulse;
pub mod quadrature;

/// Cartesian `[x, y, z]`.
pub type Vec3 = [f64; 3];

pub use error::{Error, Result};

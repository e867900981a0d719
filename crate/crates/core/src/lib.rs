//! Movable-antenna (MA) system toolkit.
//!
//! Field-response channel synthesis, antenna placement optimization, array
//! sensing and channel acquisition from sparse pilot measurements.
//!
//! Conventions used throughout:
//! - positions are in meters, angles in radians;
//! - complex numbers are [`C64`]; serialized as `[re, im]`;
//! - phase factors use `exp(+i 2π/λ kᵀx)`.

// Input checks are written `!(x > 0.0)` so NaN is rejected along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod estimate;
pub mod geometry;
pub mod linalg;
pub mod optimize;
pub mod sensing;

mod serde_cmat;

pub use error::{Error, Result};

/// Double precision complex number.
pub type C64 = num_complex::Complex64;

/// Toolkit version stamped into experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Desk-scale laboratory for the LWE-to-halfspace reduction: samplers, the
//! label reduction, empirical objectives, closed-form bounds, certified
//! reference computations and the distinguishing experiments built on them.
//!
//! The analytic and quadrature code is generic over [`Real`] (`f32`/`f64`);
//! the aliases below fix `f64`, which is what every certified check uses.

// NaN must fail argument checks, hence `!(x > 0.0)`; quadrature nodes are
// kept at their published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod closedform;
pub mod error;
pub mod experiment;
pub mod format;
pub mod metrics;
pub mod oracle;
pub mod reduction;
pub mod rng;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Certified64 = oracle::Certified<f64>;
pub type QuadratureSpec64 = oracle::QuadratureSpec<f64>;
pub type Certified32 = oracle::Certified<f32>;
pub type QuadratureSpec32 = oracle::QuadratureSpec<f32>;

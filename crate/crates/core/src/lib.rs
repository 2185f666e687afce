//! Isoholonomic bounds, tight parallel-transporting Hamiltonians and the
//! geometry of holonomic gates.
//!
//! Everything is generic over the scalar type through [`scalar::Real`];
//! the aliases below fix it to `f64` or `f32`.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod numkernel;
pub mod scalar;
pub mod synthesis;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = numkernel::ComplexMatrix<f64>;
pub type Matrix32 = numkernel::ComplexMatrix<f32>;
pub type Frame64 = geometry::Frame<f64>;
pub type Frame32 = geometry::Frame<f32>;
pub type Curve64 = geometry::SampledCurve<f64>;
pub type Plan64 = synthesis::TightPlan<f64>;
pub type Plan32 = synthesis::TightPlan<f32>;
pub type Channel64 = synthesis::PhaseChannel<f64>;
pub type Report64 = evolution::TightnessReport<f64>;
pub type Trajectory64 = evolution::Trajectory<f64>;
pub type Complex64 = num_complex::Complex<f64>;

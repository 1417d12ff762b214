//! Multi-task multi-view learning with task-affinity-driven layer widening.
//!
//! The crate trains one feature network per data view, fuses them through a
//! learned regularization layer, and iteratively widens layers into branches
//! by clustering tasks with centroid co-regularized multi-view spectral
//! clustering. Everything is deterministic given a seed.
//!
//! The crate is `no_std` (with `alloc`); file formats, configuration parsing
//! and the command-line surface live in the companion `mtmv-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod affinity;
pub mod clustering;
pub mod config;
pub mod datagen;
pub mod eigen;
pub mod error;
pub mod metrics;
pub mod nets;
pub mod params;
pub mod tape;
pub mod tensor;
pub mod widening;

pub use error::{Error, Result};
pub use tensor::Tensor;

/// Smoothing constant inside the view-weight norm `sqrt(sum w^2 + eps)`,
/// keeping the regularizer differentiable at zero.
pub const NORM_EPS: f64 = 1e-12;

/// Float math routed through `num_traits` so the crate builds without `std`.
pub(crate) mod fmath {
    use num_traits::Float;

    #[inline]
    pub fn abs(x: f64) -> f64 {
        Float::abs(x)
    }

    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        Float::sqrt(x)
    }

    #[inline]
    pub fn exp(x: f64) -> f64 {
        Float::exp(x)
    }

    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        Float::powi(x, n)
    }

    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        Float::hypot(x, y)
    }
}

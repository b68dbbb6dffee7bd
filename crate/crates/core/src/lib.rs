//! Numerical laboratory for Gaussian random waves on Euclidean space, the
//! hyperbolic disc and flat tori: seeded samplers, covariance kernels,
//! spherical transforms, spectral windows and eigenfunction statistics.

pub mod acceptance;
pub mod error;
pub mod field;
pub mod geometry;
pub mod qe;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod waves;

pub use error::{Error, Result};

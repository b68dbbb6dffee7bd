//! Special functions and quadrature used throughout the crate.

pub mod bessel;
pub mod quad;

pub use bessel::{bessel_j, bessel_j_all, j0, j1};
pub use quad::{gauss_legendre, integrate, integrate_pieces, CompositeRule, QuadResult};

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

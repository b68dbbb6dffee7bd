//! Harish-Chandra spherical function of the hyperbolic disc.
//!
//! `phi_s(r) = (1/2pi) int exp[(1/2 + i s) <z_r, e^{i theta}>] d theta`. With
//! `tan(theta/2) = e^{-r} sinh v` the Poisson kernel becomes
//!
//! ```text
//! phi_s(r) = (e^{-r/2} / pi) int_R Re exp[i s (r - 2 log cosh v + L) - L/2] dv,
//! L(v) = log(1 + e^{-2r} sinh^2 v),
//! ```
//!
//! whose integrand is smooth, even, and of width O(r) for every `r`, so the
//! trapezoid rule converges geometrically. The prefactor is kept apart from
//! the integral so nothing underflows before the final product.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

const TOL: f64 = 1e-10;
const MAX_NODES: usize = 1 << 16;
/// Beyond `v = r + TAIL` the integrand is below `e^{-TAIL}`.
const TAIL: f64 = 36.0;

#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
fn log_cosh(v: f64) -> f64 {
    v + (-2.0 * v).exp().ln_1p() - LN_2
}

#[inline]
fn integrand(s: f64, r: f64, v: f64) -> f64 {
    // log(e^{-2r} sinh^2 v), stable for all v >= 0
    let t = 2.0 * (v - r) + 2.0 * (-(-2.0 * v).exp_m1()).ln() - 2.0 * LN_2;
    let l = softplus(t);
    (-0.5 * l).exp() * (s * (r - 2.0 * log_cosh(v) + l)).cos()
}

/// Bare integral `int_R (...) dv` together with the final step size.
fn integral(s: f64, r: f64) -> Result<(f64, f64)> {
    let end = r + TAIL;
    let mut h = 0.5;
    let mut n = (end / h).ceil() as usize;
    let mut sum = 0.5 * integrand(s, r, 0.0) + (1..=n).map(|k| integrand(s, r, k as f64 * h)).sum::<f64>();
    let mut prev = 2.0 * h * sum;
    loop {
        let mid: f64 = (0..n).map(|k| integrand(s, r, (k as f64 + 0.5) * h)).sum();
        sum += mid;
        h *= 0.5;
        n *= 2;
        let cur = 2.0 * h * sum;
        if (cur - prev).abs() < TOL {
            return Ok((cur, h));
        }
        if n > MAX_NODES {
            return Err(Error::numeric(
                "spherical_function",
                format!("s = {s}, r = {r}: trapezoid estimates still differ by {:.3e} at {n} nodes", (cur - prev).abs()),
            ));
        }
        prev = cur;
    }
}

/// `phi_s(r)`, real and even in `s`, with `phi_s(0) = 1`.
pub fn spherical_function(s: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("spherical_function needs finite s and r >= 0, got s = {s}, r = {r}")));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let (i, _) = integral(s, r)?;
    Ok((-0.5 * r).exp() / PI * i)
}

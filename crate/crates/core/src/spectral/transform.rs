use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{integrate_pieces, j0, CompositeRule};
use crate::waves::spherical_function;

/// Radial profile `k(r)` vanishing beyond its support `M`.
#[derive(Clone)]
pub struct RadialKernel {
    label: String,
    support: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialKernel").field("label", &self.label).field("support", &self.support).finish()
    }
}

impl RadialKernel {
    pub fn new(label: impl Into<String>, support: f64, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel support must be positive, got {support}")));
        }
        Ok(Self { label: label.into(), support, profile: Arc::new(profile) })
    }

    /// Indicator of `[0, radius]`.
    pub fn indicator(radius: f64) -> Result<Self> {
        Self::new(format!("box:{radius}"), radius, |_| 1.0)
    }

    /// `exp(-1 / (1 - (r / radius)^2))` on `[0, radius)`.
    pub fn bump(radius: f64) -> Result<Self> {
        Self::new(format!("bump:{radius}"), radius, move |r| {
            let x = r / radius;
            if x < 1.0 {
                (-1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        })
    }

    /// Parses `box:<radius>` or `bump:<radius>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, radius) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("profile {spec:?} is not of the form kind:radius")))?;
        let radius: f64 = radius
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad profile radius in {spec:?}")))?;
        match kind {
            "box" => Self::indicator(radius),
            "bump" => Self::bump(radius),
            _ => Err(Error::InvalidArgument(format!("unknown profile kind {kind:?}"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r > self.support || r < 0.0 {
            0.0
        } else {
            (self.profile)(r)
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let inner = self.clone();
        Self { label: format!("{a}*{}", self.label), support: self.support, profile: Arc::new(move |r| a * inner.eval(r)) }
    }
}

/// Runs an adaptive quadrature over a fallible integrand, surfacing the
/// first integrand error.
pub(crate) fn integrate_fallible(
    mut f: impl FnMut(f64) -> Result<f64>,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<f64> {
    let mut failure = None;
    let res = integrate_pieces(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        breaks,
        abs_tol,
        0.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res?.value)
}

fn breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// `k^(s) = 2 pi int_0^M k(r) phi_s(r) sinh r dr`.
pub fn spherical_transform_h2(kernel: &RadialKernel, s: f64) -> Result<f64> {
    let m = kernel.support();
    let v = integrate_fallible(
        |r| Ok(kernel.eval(r) * spherical_function(s, r)? * r.sinh()),
        &breaks(0.0, m, 1.0),
        1e-9 / TAU,
    )?;
    Ok(TAU * v)
}

/// Euclidean radial transform `2 pi int_0^M k(r) J_0(rho r) r dr`.
pub fn hankel_transform(kernel: &RadialKernel, rho: f64) -> Result<f64> {
    let m = kernel.support();
    let width = if rho > 0.0 { (PI / rho).min(m) } else { m };
    let v = integrate_fallible(|r| Ok(kernel.eval(r) * j0(rho * r) * r), &breaks(0.0, m, width), 1e-9 / TAU)?;
    Ok(TAU * v)
}

/// Plancherel weight of the disc up to the calibrated constant.
#[inline]
pub fn plancherel_weight(s: f64) -> f64 {
    s * (PI * s).tanh()
}

/// `phi_{s_i}(r_j)` for all pairs, row-major in `s`.
pub fn phi_table(s: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<Result<Vec<f64>>> = s
        .par_iter()
        .map(|&si| r.iter().map(|&rj| spherical_function(si, rj)).collect())
        .collect();
    let mut out = Vec::with_capacity(s.len() * r.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// `int hat(s) phi_s(r_j) p(s) ds` on an `s` rule, without the constant.
pub fn inverse_on_grid(hat: &[f64], s_rule: &CompositeRule, phi_sr: &[f64], n_r: usize) -> Vec<f64> {
    let mut k = vec![0.0; n_r];
    for (i, (&s, &w)) in s_rule.nodes.iter().zip(&s_rule.weights).enumerate() {
        let c = w * hat[i] * plancherel_weight(s);
        for (kj, p) in k.iter_mut().zip(&phi_sr[i * n_r..(i + 1) * n_r]) {
            *kj += c * p;
        }
    }
    k
}

/// `2 pi int k(r) phi_{t_m}(r) sinh r dr` on an `r` rule.
pub fn forward_on_grid(k: &[f64], r_rule: &CompositeRule, phi_tr: &[f64]) -> Vec<f64> {
    let n_r = r_rule.nodes.len();
    let weighted: Vec<f64> =
        r_rule.nodes.iter().zip(&r_rule.weights).zip(k).map(|((&r, &w), &kv)| w * kv * r.sinh()).collect();
    phi_tr.chunks_exact(n_r).map(|row| TAU * row.iter().zip(&weighted).map(|(a, b)| a * b).sum::<f64>()).collect()
}

/// Result of fitting the inversion constant on one reference spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlancherelCalibration {
    pub constant: f64,
    pub round_trip_error: f64,
}

/// Symmetrized Gaussian `e^{-(s-c)^2/2w^2} + e^{-(s+c)^2/2w^2}`.
pub fn gaussian_spectrum(center: f64, width: f64) -> impl Fn(f64) -> f64 + Copy {
    move |s: f64| {
        let a = (s - center) / width;
        let b = (s + center) / width;
        (-0.5 * a * a).exp() + (-0.5 * b * b).exp()
    }
}

/// Fits `c` in `k = c int hat phi p ds` so that the forward transform of the
/// inverse reproduces `hat` in least squares on `[0, check_max]`.
pub fn calibrate_plancherel(hat: impl Fn(f64) -> f64, s_max: f64, check_max: f64) -> Result<PlancherelCalibration> {
    let s_rule = CompositeRule::uniform(0.0, s_max, 0.25, 8);
    let r_rule = CompositeRule::uniform(0.0, 25.0, 0.5, 10);
    let hat_nodes: Vec<f64> = s_rule.nodes.iter().map(|&s| hat(s)).collect();
    let phi_sr = phi_table(&s_rule.nodes, &r_rule.nodes)?;
    let k = inverse_on_grid(&hat_nodes, &s_rule, &phi_sr, r_rule.nodes.len());

    let checks: Vec<f64> = (0..=40).map(|i| check_max * i as f64 / 40.0).collect();
    let phi_tr = phi_table(&checks, &r_rule.nodes)?;
    let t = forward_on_grid(&k, &r_rule, &phi_tr);
    let target: Vec<f64> = checks.iter().map(|&s| hat(s)).collect();
    let num: f64 = t.iter().zip(&target).map(|(a, b)| a * b).sum();
    let den: f64 = t.iter().map(|a| a * a).sum();
    if den == 0.0 {
        return Err(Error::numeric("plancherel calibration", "reference spectrum transforms to zero"));
    }
    let constant = num / den;
    let round_trip_error = t.iter().zip(&target).map(|(a, b)| (constant * a - b).abs()).fold(0.0, f64::max);
    if round_trip_error > 1e-4 {
        return Err(Error::numeric(
            "plancherel calibration",
            format!("round-trip error {round_trip_error:.3e} exceeds 1e-4 (constant {constant})"),
        ));
    }
    Ok(PlancherelCalibration { constant, round_trip_error })
}

static PLANCHEREL: OnceLock<std::result::Result<PlancherelCalibration, String>> = OnceLock::new();

/// The inversion constant, calibrated once on `gaussian_spectrum(1, 0.3)`.
pub fn plancherel_constant() -> Result<f64> {
    PLANCHEREL
        .get_or_init(|| calibrate_plancherel(gaussian_spectrum(1.0, 0.3), 4.0, 3.0).map_err(|e| e.to_string()))
        .as_ref()
        .map(|c| c.constant)
        .map_err(|e| Error::numeric("plancherel calibration", e.clone()))
}

/// `k(r) = c int_0^{s_max} hat(s) phi_s(r) s tanh(pi s) ds` on a fixed
/// composite Gauss-Legendre rule, so the map is exactly linear in `hat`.
pub fn inverse_transform_h2(hat: impl Fn(f64) -> f64, s_max: f64, r: f64) -> Result<f64> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("support bound must be positive, got {s_max}")));
    }
    let c = plancherel_constant()?;
    let rule = CompositeRule::uniform(0.0, s_max, 0.25, 12);
    let mut acc = 0.0;
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * hat(s) * spherical_function(s, r)? * plancherel_weight(s);
    }
    Ok(c * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::j1;

    #[test]
    fn profile_parsing() {
        let k = RadialKernel::parse("box:1").unwrap();
        assert_eq!((k.eval(0.5), k.eval(1.0), k.eval(1.5)), (1.0, 1.0, 0.0));
        assert!(RadialKernel::parse("bump:2").unwrap().eval(1.0) > 0.0);
        assert!(RadialKernel::parse("tri:1").is_err());
        assert!(RadialKernel::parse("box").is_err());
        assert!(RadialKernel::parse("box:-1").is_err());
    }

    #[test]
    fn hankel_of_indicator() {
        let k = RadialKernel::indicator(1.0).unwrap();
        for rho in [0.5, 1.0, 7.3, 150.0] {
            let want = TAU * j1(rho) / rho;
            assert!((hankel_transform(&k, rho).unwrap() - want).abs() < 1e-9);
        }
    }

    #[test]
    fn narrow_bump_transforms_to_one() {
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.05, 0.0125] {
            let k = RadialKernel::bump(eps).unwrap();
            let mass = spherical_transform_h2(&k, 0.0).unwrap();
            let k = k.scaled(1.0 / mass);
            let dev = (spherical_transform_h2(&k, 2.0).unwrap() - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn indicator_at_s_zero_matches_nested_quadrature() {
        // phi_0(r) = (1/2pi) int (P_z)^{1/2}, P = (1 - |z|^2)/|z - e^{it}|^2 with |z| = tanh(r/2)
        let outer = |r: f64| {
            let z = (0.5 * r).tanh();
            let n = 2000;
            let mut acc = 0.0;
            for k in 0..n {
                let t = TAU * (k as f64 + 0.5) / n as f64;
                let p = (1.0 - z * z) / (1.0 - 2.0 * z * t.cos() + z * z);
                acc += p.sqrt();
            }
            acc / n as f64 * r.sinh()
        };
        let rule = CompositeRule::uniform(0.0, 1.0, 0.1, 10);
        let want = TAU * rule.integrate(outer);
        let got = spherical_transform_h2(&RadialKernel::indicator(1.0).unwrap(), 0.0).unwrap();
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn transform_is_linear() {
        let a = RadialKernel::bump(1.5).unwrap();
        let b = RadialKernel::indicator(0.7).unwrap();
        let (a2, b2) = (a.clone(), b.clone());
        let sum = RadialKernel::new("sum", 1.5, move |r| 2.0 * a2.eval(r) - 3.0 * b2.eval(r)).unwrap();
        for s in [0.3, 1.7] {
            let lhs = spherical_transform_h2(&sum, s).unwrap();
            let rhs = 2.0 * spherical_transform_h2(&a, s).unwrap() - 3.0 * spherical_transform_h2(&b, s).unwrap();
            assert!((lhs - rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn calibrated_constant_is_one_over_two_pi() {
        let c = plancherel_constant().unwrap();
        assert!((c * TAU - 1.0).abs() < 1e-6, "c = {c}");
    }

    #[test]
    fn inverse_is_linear() {
        let hat = gaussian_spectrum(1.5, 0.4);
        let a = inverse_transform_h2(hat, 4.0, 0.8).unwrap();
        let b = inverse_transform_h2(|s| 2.0 * hat(s), 4.0, 0.8).unwrap();
        assert_eq!(b, 2.0 * a);
        let c = inverse_transform_h2(|s| 3.0 * hat(s), 4.0, 0.8).unwrap();
        assert!((c - 3.0 * a).abs() <= 1e-14 * c.abs());
    }
}

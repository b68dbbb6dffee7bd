use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// 99th percentiles of the Kolmogorov-Smirnov distance between `n` standard
/// normal draws and the normal law, from 10^4 simulated null replicas
/// (`cargo run --release --example ks_null`).
pub const KS_NULL_99: [(usize, f64); 2] = [(5_000, KS_NULL_99_5K), (20_000, KS_NULL_99_20K)];
const KS_NULL_99_5K: f64 = 0.02291;
const KS_NULL_99_20K: f64 = 0.01155;

/// Summary of one-point values `X = F(x0)` over independent samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDistribution {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_distance: f64,
    /// `e(F) = E[X^2]`.
    pub energy: f64,
    /// Standard error of the energy estimate.
    pub energy_stderr: f64,
    pub tail_cutoff: f64,
    /// `P(|X| > K)`.
    pub tail_mass: f64,
}

impl ValueDistribution {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "moment,value")?;
        for (k, v) in [
            ("n", self.n as f64),
            ("mean", self.mean),
            ("variance", self.variance),
            ("skewness", self.skewness),
            ("excess_kurtosis", self.excess_kurtosis),
            ("ks_distance", self.ks_distance),
            ("energy", self.energy),
            ("energy_stderr", self.energy_stderr),
            ("tail_cutoff", self.tail_cutoff),
            ("tail_mass", self.tail_mass),
        ] {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

/// `sup_x |F_n(x) - Phi(x)|`.
pub fn ks_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = normal_cdf(x);
            (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs())
        })
        .fold(0.0, f64::max)
}

pub fn gaussianity_report(values: &[f64], tail_cutoff: f64) -> Result<ValueDistribution> {
    if values.len() < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 values, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let central = |p: i32| values.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let energy = values.iter().map(|x| x * x).sum::<f64>() / n;
    let e2 = values.iter().map(|x| (x * x - energy).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(ValueDistribution {
        n: values.len(),
        mean,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        ks_distance: ks_normal(values),
        energy,
        energy_stderr: (e2 / n).sqrt(),
        tail_cutoff,
        tail_mass: values.iter().filter(|x| x.abs() > tail_cutoff).count() as f64 / n,
    })
}

/// Tail table of the square measure `d tau(x) = x d rho(x)`, `rho` the law of
/// `X^2`: `tau((K, oo)) = E[X^2; X^2 > K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMeasure {
    pub energy: f64,
    pub cutoffs: Vec<f64>,
    pub tail: Vec<f64>,
    /// `1 - e(F)`, the mass lost at infinity when `e(F) < 1`.
    pub deficit: f64,
}

pub fn square_measure(values: &[f64], cutoffs: &[f64]) -> Result<SquareMeasure> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    let n = values.len() as f64;
    let sq: Vec<f64> = values.iter().map(|x| x * x).collect();
    let energy = sq.iter().sum::<f64>() / n;
    let tail = cutoffs.iter().map(|&k| sq.iter().filter(|&&x| x > k).sum::<f64>() / n).collect();
    Ok(SquareMeasure { energy, cutoffs: cutoffs.to_vec(), tail, deficit: 1.0 - energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::TAU;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn ks_of_small_inputs() {
        assert!((ks_normal(&[0.0]) - 0.5).abs() < 1e-15);
        let d = ks_normal(&[-1.0, 1.0]);
        assert!((d - normal_cdf(-1.0).max(0.5 - normal_cdf(-1.0))).abs() < 1e-15);
    }

    #[test]
    fn normal_input_passes() {
        let r = gaussianity_report(&normals(20_000, 5), 3.0).unwrap();
        assert!(r.ks_distance < 0.02);
        assert!(r.ks_distance <= KS_NULL_99[1].1);
        assert!((r.energy - 1.0).abs() < 3.0 * r.energy_stderr);
        assert!(r.skewness.abs() < 0.05 && r.excess_kurtosis.abs() < 0.1);
        assert!((r.tail_mass - 2.0 * normal_cdf(-3.0)).abs() < 0.002);
    }

    #[test]
    fn sine_of_uniform_phase_is_rejected() {
        let mut r = rng::stream(9, 0);
        let v: Vec<f64> = (0..20_000).map(|_| (r.random::<f64>() * TAU).sin()).collect();
        let rep = gaussianity_report(&v, 2.0).unwrap();
        assert!(rep.ks_distance > 0.05);
        assert!((0.0..=1.0).contains(&rep.ks_distance));
        assert!(gaussianity_report(&v[..999], 2.0).is_err());
        let tau = square_measure(&v, &[0.0, 2.0]).unwrap();
        assert_eq!(tau.tail[1], 0.0);
        assert_eq!(tau.tail[0], tau.energy);
    }

    #[test]
    fn square_measure_tail_of_normal() {
        let v = normals(200_000, 2);
        let tau = square_measure(&v, &[0.0, 4.0]).unwrap();
        // E[Z^2; |Z| > 2] = 2 (2 phi(2) + 1 - Phi(2))
        let phi2 = (-2.0f64).exp() / TAU.sqrt();
        let oracle = 2.0 * (2.0 * phi2 + normal_cdf(-2.0));
        assert!((tau.tail[1] - oracle).abs() < 0.01);
        assert_eq!(tau.tail[0], tau.energy);
        assert!((tau.deficit).abs() < 0.01);
    }
}

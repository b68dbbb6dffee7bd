//! Covariance kernels and seeded Gaussian wave samplers.

mod euclidean;
mod hyperbolic;
mod spherical;

pub use euclidean::{BesselPolar, BesselPolarSpec, EuclideanWave, EuclideanWaveSpec, InvariantSine};
pub use hyperbolic::{HyperbolicWave, HyperbolicWaveSpec};
pub use spherical::spherical_function;

use crate::error::{Error, Result};
use crate::field::{FieldDescriptor, FieldSample};
use crate::geometry::{PatchGrid, PointFrame, Probes, Space};
use crate::special::j0;

/// `E[F(x) F(y)]` at `|x - y| = r` for the isotropic monochromatic wave with
/// eigenvalue `mu^2`, directions weighted by the probability measure on the
/// sphere.
pub fn covariance_euclidean(dim: usize, mu: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r must be >= 0, got {r}")));
    }
    let x = mu * r;
    match dim {
        2 => Ok(j0(x)),
        3 if x == 0.0 => Ok(1.0),
        3 => Ok(x.sin() / x),
        _ => Err(Error::InvalidArgument(format!("dimension {dim} is not supported"))),
    }
}

/// A field evaluated at fixed probes, ready to be drawn for many seeds.
pub trait PreparedField: Sync {
    fn eval(&self, seed: u64) -> Vec<f64>;
}

/// A seeded random field model.
pub trait FieldSampler: Sync {
    fn descriptor(&self) -> FieldDescriptor;

    fn space(&self) -> Space;

    /// Theoretical `E[F(x) F(y)]` at distance `r`.
    fn covariance(&self, r: f64) -> Result<f64>;

    fn prepare(&self, center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>>;

    fn sample(&self, patch: &PatchGrid, seed: u64) -> Result<FieldSample> {
        let values = self.prepare(&patch.center, &patch.probes())?.eval(seed);
        FieldSample::new(patch.clone(), values, self.descriptor(), seed)
    }
}

/// Five-point Laplacian residual `max |Delta_h F + mu^2 F| / max |F|` over the
/// interior of a Euclidean sample.
pub fn helmholtz_residual(sample: &FieldSample, mu: f64) -> f64 {
    let n = sample.resolution();
    let h = sample.patch.spacing();
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let lap = (sample.at(i + 1, j) + sample.at(i - 1, j) + sample.at(i, j + 1) + sample.at(i, j - 1)
                - 4.0 * sample.at(i, j))
                / (h * h);
            worst = worst.max((lap + mu * mu * sample.at(i, j)).abs());
        }
    }
    let norm = sample.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    worst / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_kernel_examples() {
        assert_eq!(covariance_euclidean(2, 1.0, 0.0).unwrap(), 1.0);
        assert!(covariance_euclidean(2, 1.0, 2.404826).unwrap().abs() < 1e-6);
        assert!(covariance_euclidean(3, 2.0, std::f64::consts::FRAC_PI_2).unwrap().abs() < 1e-15);
        assert_eq!(covariance_euclidean(3, 2.0, 0.0).unwrap(), 1.0);
        assert!(covariance_euclidean(4, 1.0, 1.0).is_err());
        assert!(covariance_euclidean(2, 1.0, -1.0).is_err());
    }
}

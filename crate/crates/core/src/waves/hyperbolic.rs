use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{spherical_function, FieldSampler, PreparedField};
use crate::error::{Error, Result};
use crate::field::FieldDescriptor;
use crate::geometry::{disc_exp, horocycle_bracket, PointFrame, Probes, Space};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicWaveSpec {
    pub s: f64,
    pub n_boundary: usize,
}

/// Boundary white noise pushed through the Poisson transform:
/// `F(z) = Re[(1/sqrt n) sum_k zeta_k e^{(1/2 + i s) <z, b_k>}]` with
/// equispaced `b_k` and `E|zeta_k|^2 = 2`. Patch offsets are geodesic
/// (exponential-map) coordinates at the center.
#[derive(Debug, Clone)]
pub struct HyperbolicWave {
    spec: HyperbolicWaveSpec,
}

impl HyperbolicWave {
    pub fn new(spec: HyperbolicWaveSpec) -> Result<Self> {
        if !(spec.s > 0.0 && spec.s.is_finite()) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {}", spec.s)));
        }
        if spec.n_boundary < 32 {
            return Err(Error::InvalidArgument(format!("need at least 32 boundary nodes, got {}", spec.n_boundary)));
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &HyperbolicWaveSpec {
        &self.spec
    }
}

struct PreparedDisc {
    n: usize,
    /// Per probe, per boundary node: real and imaginary part of
    /// `e^{(1/2 + is) <z, b_k>} / sqrt n`.
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PreparedField for PreparedDisc {
    fn eval(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, 0);
        let mut zr = Vec::with_capacity(self.n);
        let mut zi = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            zr.push(rng.sample::<f64, _>(StandardNormal));
            zi.push(rng.sample::<f64, _>(StandardNormal));
        }
        self.re
            .chunks_exact(self.n)
            .zip(self.im.chunks_exact(self.n))
            .map(|(br, bi)| {
                let mut acc = 0.0;
                for k in 0..self.n {
                    acc += zr[k] * br[k] - zi[k] * bi[k];
                }
                acc
            })
            .collect()
    }
}

impl FieldSampler for HyperbolicWave {
    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::Hyperbolic(self.spec.clone())
    }

    fn space(&self) -> Space {
        Space::HyperbolicDisc
    }

    fn covariance(&self, r: f64) -> Result<f64> {
        spherical_function(self.spec.s, r)
    }

    fn prepare(&self, center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>> {
        let HyperbolicWaveSpec { s, n_boundary: n } = self.spec;
        let z0 = center.disc_point();
        if z0.norm_sqr() >= 1.0 {
            return Err(Error::Domain(format!("patch center {z0} is not inside the unit disc")));
        }
        let (sn, cs) = center.angle.sin_cos();
        let norm = (n as f64).sqrt().recip();
        let mut re = Vec::with_capacity(probes.len() * n);
        let mut im = Vec::with_capacity(probes.len() * n);
        for u in probes.offsets() {
            let z = disc_exp(z0, [cs * u[0] - sn * u[1], sn * u[0] + cs * u[1]]);
            for k in 0..n {
                let h = horocycle_bracket(z, TAU * k as f64 / n as f64)
                    .map_err(|_| Error::Precondition(format!("patch point at offset {u:?} leaves the disc numerically")))?;
                let m = (0.5 * h).exp() * norm;
                let (si, co) = (s * h).sin_cos();
                re.push(m * co);
                im.push(m * si);
            }
        }
        Ok(Box::new(PreparedDisc { n, re, im }))
    }
}

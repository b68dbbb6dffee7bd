use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{covariance_euclidean, FieldSampler, PreparedField};
use crate::error::{Error, Result};
use crate::field::FieldDescriptor;
use crate::geometry::{PointFrame, Probes, Space};
use crate::rng::{self, LabRng};
use crate::special::{bessel_j_all, j0};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanWaveSpec {
    pub dim: usize,
    pub mu: f64,
    pub n_directions: usize,
}

/// Finite random plane-wave superposition
/// `F(x) = sqrt(2/n) sum_k cos(mu <x, xi_k> + theta_k)`. In dimension 3 the
/// patch is the plane through the center spanned by the first two axes.
#[derive(Debug, Clone)]
pub struct EuclideanWave {
    spec: EuclideanWaveSpec,
}

impl EuclideanWave {
    pub fn new(spec: EuclideanWaveSpec) -> Result<Self> {
        if spec.dim != 2 && spec.dim != 3 {
            return Err(Error::InvalidArgument(format!("wave dimension must be 2 or 3, got {}", spec.dim)));
        }
        if !(spec.mu > 0.0 && spec.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {}", spec.mu)));
        }
        if spec.n_directions < 16 {
            return Err(Error::InvalidArgument(format!("need at least 16 directions, got {}", spec.n_directions)));
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &EuclideanWaveSpec {
        &self.spec
    }

    fn draw_direction(&self, rng: &mut LabRng) -> [f64; 3] {
        if self.spec.dim == 2 {
            let (s, c) = (rng.random::<f64>() * TAU).sin_cos();
            [c, s, 0.0]
        } else {
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (rng.random::<f64>() * TAU).sin_cos();
            [rho * c, rho * s, z]
        }
    }
}

fn ambient_center(center: &PointFrame) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (dst, src) in c.iter_mut().zip(&center.point) {
        *dst = *src;
    }
    c
}

struct PreparedPlane<'a> {
    wave: &'a EuclideanWave,
    center: [f64; 3],
    axes: ([f64; 2], [f64; 2]),
    probes: Probes,
}

impl PreparedField for PreparedPlane<'_> {
    fn eval(&self, seed: u64) -> Vec<f64> {
        let mu = self.wave.spec.mu;
        let n = self.wave.spec.n_directions;
        let mut rng = rng::stream(seed, 0);
        let mut out = vec![0.0; self.probes.len()];
        let (e1, e2) = self.axes;
        let c = self.center;

        match &self.probes {
            Probes::Lattice { origin, spacing, size, cells } => {
                let mut rows = vec![Complex64::new(0.0, 0.0); *size];
                let mut cols = vec![Complex64::new(0.0, 0.0); *size];
                for _ in 0..n {
                    let xi = self.wave.draw_direction(&mut rng);
                    let theta = rng.random::<f64>() * TAU;
                    let a = e1[0] * xi[0] + e1[1] * xi[1];
                    let b = e2[0] * xi[0] + e2[1] * xi[1];
                    let c0 = c[0] * xi[0] + c[1] * xi[1] + c[2] * xi[2];
                    let start = mu * (c0 + origin * (a + b)) + theta;
                    fill_powers(&mut rows, Complex64::from_polar(1.0, start), Complex64::from_polar(1.0, mu * spacing * a));
                    fill_powers(&mut cols, Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, mu * spacing * b));
                    for (o, &(i, j)) in out.iter_mut().zip(cells) {
                        *o += rows[i].re * cols[j].re - rows[i].im * cols[j].im;
                    }
                }
            }
            Probes::Points(points) => {
                for _ in 0..n {
                    let xi = self.wave.draw_direction(&mut rng);
                    let theta = rng.random::<f64>() * TAU;
                    let a = e1[0] * xi[0] + e1[1] * xi[1];
                    let b = e2[0] * xi[0] + e2[1] * xi[1];
                    let c0 = c[0] * xi[0] + c[1] * xi[1] + c[2] * xi[2];
                    for (o, u) in out.iter_mut().zip(points) {
                        *o += (mu * (c0 + u[0] * a + u[1] * b) + theta).cos();
                    }
                }
            }
        }
        let scale = (2.0 / n as f64).sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

fn fill_powers(buf: &mut [Complex64], start: Complex64, step: Complex64) {
    let mut z = start;
    for b in buf.iter_mut() {
        *b = z;
        z *= step;
    }
}

impl FieldSampler for EuclideanWave {
    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::Euclidean(self.spec.clone())
    }

    fn space(&self) -> Space {
        Space::Euclidean { dim: self.spec.dim }
    }

    fn covariance(&self, r: f64) -> Result<f64> {
        covariance_euclidean(self.spec.dim, self.spec.mu, r)
    }

    fn prepare(&self, center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>> {
        Ok(Box::new(PreparedPlane { wave: self, center: ambient_center(center), axes: center.axes(), probes: probes.clone() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselPolarSpec {
    pub mu: f64,
    pub n_modes: usize,
}

impl BesselPolarSpec {
    pub fn sampler(&self) -> Result<BesselPolar> {
        BesselPolar::new(self.mu, self.n_modes)
    }
}

/// Truncated polar expansion
/// `F(r, theta) = c_0 J_0(mu r) + 2 Re sum_{n=1}^{N} c_n J_n(mu r) e^{i n theta}`,
/// `c_0` real standard, `c_n` complex with `E|c_n|^2 = 1`, which is the real
/// series with `c_{-n} = conj(c_n)`. Angles are measured from the ambient
/// first axis, so the frame rotates the polar coordinates.
#[derive(Debug, Clone)]
pub struct BesselPolar {
    spec: BesselPolarSpec,
}

impl BesselPolar {
    pub fn new(mu: f64, n_modes: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { spec: BesselPolarSpec { mu, n_modes } })
    }
}

struct PreparedPolar {
    n_modes: usize,
    /// Per probe: `J_0` followed by `2 J_n e^{i n theta}` for `n = 1..=N`.
    j0: Vec<f64>,
    basis: Vec<Complex64>,
}

impl PreparedField for PreparedPolar {
    fn eval(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, 0);
        let c0: f64 = rng.sample(StandardNormal);
        let coeffs: Vec<(f64, f64)> = (0..self.n_modes)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                (x / SQRT_2, y / SQRT_2)
            })
            .collect();
        let m = self.n_modes;
        self.j0
            .iter()
            .enumerate()
            .map(|(p, &j)| {
                let row = &self.basis[p * m..(p + 1) * m];
                c0 * j + row.iter().zip(&coeffs).map(|(b, &(x, y))| x * b.re - y * b.im).sum::<f64>()
            })
            .collect()
    }
}

impl FieldSampler for BesselPolar {
    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::BesselPolar(self.spec.clone())
    }

    fn space(&self) -> Space {
        Space::Euclidean { dim: 2 }
    }

    fn covariance(&self, r: f64) -> Result<f64> {
        covariance_euclidean(2, self.spec.mu, r)
    }

    fn prepare(&self, center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>> {
        let BesselPolarSpec { mu, n_modes } = self.spec;
        let offsets = probes.offsets();
        let r_max = offsets.iter().map(|u| u[0].hypot(u[1])).fold(0.0, f64::max);
        let tail = bessel_j_all(n_modes, mu * r_max)[n_modes].abs();
        if tail > 1e-8 {
            log::warn!("Bessel series truncated at {n_modes} modes: |J_{n_modes}({})| = {tail:.2e} > 1e-8", mu * r_max);
        }
        let mut j0s = Vec::with_capacity(offsets.len());
        let mut basis = Vec::with_capacity(offsets.len() * n_modes);
        for u in &offsets {
            let r = u[0].hypot(u[1]);
            let theta = u[1].atan2(u[0]) + center.angle;
            let js = bessel_j_all(n_modes, mu * r);
            j0s.push(js[0]);
            let step = Complex64::from_polar(1.0, theta);
            let mut e = step;
            for j in &js[1..] {
                basis.push(e * (2.0 * j));
                e *= step;
            }
        }
        Ok(Box::new(PreparedPolar { n_modes, j0: j0s, basis }))
    }
}

/// `IS(x) = sin(<eps, x> + a)`, `eps` uniform on the unit circle and `a`
/// uniform on `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InvariantSine;

struct PreparedSine {
    points: Vec<[f64; 2]>,
}

impl PreparedField for PreparedSine {
    fn eval(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, 0);
        let (s, c) = (rng.random::<f64>() * TAU).sin_cos();
        let a = rng.random::<f64>() * TAU;
        self.points.iter().map(|x| (c * x[0] + s * x[1] + a).sin()).collect()
    }
}

impl FieldSampler for InvariantSine {
    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::InvariantSine
    }

    fn space(&self) -> Space {
        Space::Euclidean { dim: 2 }
    }

    fn covariance(&self, r: f64) -> Result<f64> {
        Ok(0.5 * j0(r))
    }

    fn prepare(&self, center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>> {
        let space = Space::Euclidean { dim: 2 };
        let center = PointFrame::new(ambient_center(center)[..2].to_vec(), center.angle);
        let points = probes
            .offsets()
            .into_iter()
            .map(|u| {
                let p = space.offset_point(&center, u);
                [p[0], p[1]]
            })
            .collect();
        Ok(Box::new(PreparedSine { points }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PatchGrid;
    use crate::waves::helmholtz_residual;

    fn plane(mu: f64) -> EuclideanWave {
        EuclideanWave::new(EuclideanWaveSpec { dim: 2, mu, n_directions: 64 }).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(EuclideanWave::new(EuclideanWaveSpec { dim: 2, mu: 1.0, n_directions: 8 }).is_err());
        assert!(EuclideanWave::new(EuclideanWaveSpec { dim: 4, mu: 1.0, n_directions: 64 }).is_err());
        assert!(EuclideanWave::new(EuclideanWaveSpec { dim: 2, mu: 0.0, n_directions: 64 }).is_err());
        assert!(BesselPolar::new(-1.0, 10).is_err());
    }

    #[test]
    fn lattice_path_matches_direct_evaluation() {
        for dim in [2, 3] {
            let w = EuclideanWave::new(EuclideanWaveSpec { dim, mu: 1.7, n_directions: 32 }).unwrap();
            let center = PointFrame::new(vec![0.4, -1.3, 0.2][..dim].to_vec(), 2.1);
            let patch = PatchGrid::new(center.clone(), 3.0, 17).unwrap();
            let fast = w.prepare(&center, &patch.probes()).unwrap().eval(5);
            let slow = w.prepare(&center, &Probes::Points(patch.offsets())).unwrap().eval(5);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let patch = PatchGrid::new(PointFrame::origin(2), 2.0, 9).unwrap();
        let w = plane(1.0);
        assert_eq!(w.sample(&patch, 11).unwrap(), w.sample(&patch, 11).unwrap());
        assert_ne!(w.sample(&patch, 11).unwrap().values, w.sample(&patch, 12).unwrap().values);
    }

    #[test]
    fn helmholtz_residual_is_second_order() {
        let w = plane(1.0);
        let coarse = w.sample(&PatchGrid::new(PointFrame::origin(2), 2.0, 21).unwrap(), 3).unwrap();
        let fine = w.sample(&PatchGrid::new(PointFrame::origin(2), 2.0, 41).unwrap(), 3).unwrap();
        let ratio = helmholtz_residual(&coarse, 1.0) / helmholtz_residual(&fine, 1.0);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn single_mode_polar_field_is_radial() {
        let b = BesselPolar::new(1.0, 0).unwrap();
        let patch = PatchGrid::new(PointFrame::origin(2), 3.0, 7).unwrap();
        let s = b.sample(&patch, 4).unwrap();
        let g = s.center_value();
        for (v, u) in s.values.iter().zip(patch.offsets()) {
            assert!((v - g * j0(u[0].hypot(u[1]))).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_sine_is_bounded_and_exact() {
        let patch = PatchGrid::new(PointFrame::new(vec![1.0, 2.0], 0.3), 3.0, 31).unwrap();
        for seed in 0..20 {
            let s = InvariantSine.sample(&patch, seed).unwrap();
            assert!(s.values.iter().all(|v| v.abs() <= 1.0));
            let h = s.patch.spacing();
            assert!(helmholtz_residual(&s, 1.0) < h * h / 10.0);
        }
    }

    #[test]
    fn invariant_sine_second_moment() {
        let probes = Probes::Points(vec![[0.0, 0.0]]);
        let prepared = InvariantSine.prepare(&PointFrame::origin(2), &probes).unwrap();
        let n = 100_000;
        let m: f64 = (0..n).map(|i| prepared.eval(i).pop().unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 0.01, "{m}");
    }
}

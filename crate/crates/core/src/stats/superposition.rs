use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldDescriptor, FieldSample};
use crate::geometry::{check_injective, lifted_point, sample_base_with, PatchGrid, PointFrame, Probes, Space};
use crate::rng::{self, child_seed};
use crate::spectral::{enumerate_window, SpectralWindow, TorusEigenbasis};
use crate::special::j0;
use crate::waves::{FieldSampler, PreparedField};

/// `(1/k) sum_i phi_i(x) phi_i(y)`.
pub fn window_kernel(basis: &TorusEigenbasis, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("window contains no eigenvalues".into()));
    }
    Ok(basis.functions.iter().map(|m| m.eval(x) * m.eval(y)).sum::<f64>() / basis.len() as f64)
}

/// Mean of `|K(x, x + u / mu) - J_0(|u|)|` over `n` random base points `x`
/// and displacements `u`, `|u|` uniform on `[0, r_max]`, `mu = sqrt(lambda0)`.
pub fn window_kernel_distance(basis: &TorusEigenbasis, n: usize, r_max: f64, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let mu = basis.window.lambda0.sqrt();
    let mut rng = rng::stream(seed, 0);
    let mut total = 0.0;
    for _ in 0..n {
        let base = sample_base_with(&basis.space(), &mut rng)?;
        let r = rng.random::<f64>() * r_max;
        let u = [r, 0.0];
        let x = [base.point[0], base.point[1]];
        let y = lifted_point(basis.side, &base, u, mu);
        total += (window_kernel(basis, x, y)? - j0(r)).abs();
    }
    Ok(total / n as f64)
}

/// Random unit-sphere combinations `f = sum c_j phi_j` of a window basis,
/// read on patches around random framed base points at metric scale
/// `mu = sqrt(lambda0)`.
///
/// Draw `seed` takes its coefficients from `stream(seed, 0)` and the base
/// point for read `r` from `stream(seed, 1 + r)`.
#[derive(Debug, Clone)]
pub struct SuperpositionSampler {
    pub basis: TorusEigenbasis,
    pub mu: f64,
}

impl SuperpositionSampler {
    pub fn new(side: f64, lambda0: f64, delta: f64) -> Result<Self> {
        let basis = enumerate_window(&Space::flat_torus(side)?, &SpectralWindow::new(lambda0, delta)?)?;
        Self::from_basis(basis)
    }

    pub fn from_basis(basis: TorusEigenbasis) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "window [{}, {}] contains no torus eigenvalues",
                basis.window.lower(),
                basis.window.upper()
            )));
        }
        let mu = basis.window.lambda0.sqrt();
        Ok(Self { basis, mu })
    }

    /// Coefficients with per-coordinate variance `1/k`, normalized to `|c| = 1`.
    pub fn coefficients(&self, seed: u64) -> Vec<f64> {
        let k = self.basis.len();
        let mut r = rng::stream(seed, 0);
        let sd = (1.0 / k as f64).sqrt();
        let mut c: Vec<f64> = (0..k).map(|_| sd * r.sample::<f64, _>(StandardNormal)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        c
    }

    pub fn base(&self, seed: u64, read: u64) -> PointFrame {
        sample_base_with(&self.basis.space(), &mut rng::stream(seed, 1 + read)).expect("torus basis")
    }

    pub fn eval(&self, coeffs: &[f64], x: [f64; 2]) -> f64 {
        self.basis.functions.iter().zip(coeffs).map(|(m, c)| c * m.eval(x)).sum()
    }

    fn descriptor_for(&self, read: u64) -> FieldDescriptor {
        let w = self.basis.window;
        FieldDescriptor::Superposition { side: self.basis.side, lambda0: w.lambda0, delta: w.delta, read }
    }

    fn values(&self, offsets: &[[f64; 2]], seed: u64, read: u64) -> (PointFrame, Vec<f64>) {
        let c = self.coefficients(seed);
        let base = self.base(seed, read);
        let v = offsets.iter().map(|&u| self.eval(&c, lifted_point(self.basis.side, &base, u, self.mu))).collect();
        (base, v)
    }

    /// The lifted sample; the returned patch is centered at the drawn base.
    pub fn draw(&self, patch: &PatchGrid, seed: u64, read: u64) -> Result<FieldSample> {
        check_injective(&self.basis.space(), patch, self.mu)?;
        let (base, values) = self.values(&patch.offsets(), seed, read);
        let lifted = PatchGrid { center: base, ..patch.clone() };
        FieldSample::new(lifted, values, self.descriptor_for(read), seed)
    }
}

struct PreparedSuperposition<'a> {
    sampler: &'a SuperpositionSampler,
    offsets: Vec<[f64; 2]>,
}

impl PreparedField for PreparedSuperposition<'_> {
    fn eval(&self, seed: u64) -> Vec<f64> {
        self.sampler.values(&self.offsets, seed, 0).1
    }
}

/// Used as a field on patch coordinates; the patch center is ignored and each
/// seed draws its own base point.
impl FieldSampler for SuperpositionSampler {
    fn descriptor(&self) -> FieldDescriptor {
        self.descriptor_for(0)
    }

    fn space(&self) -> Space {
        Space::Euclidean { dim: 2 }
    }

    /// Window kernel averaged over frame rotations:
    /// `(1/k) sum_j J_0(|xi_j| r / mu)`.
    fn covariance(&self, r: f64) -> Result<f64> {
        let k = self.basis.len() as f64;
        Ok(self.basis.functions.iter().map(|m| j0(m.frequency() * r / self.mu)).sum::<f64>() / k)
    }

    fn prepare(&self, _center: &PointFrame, probes: &Probes) -> Result<Box<dyn PreparedField + '_>> {
        let offsets = probes.offsets();
        let reach = offsets.iter().map(|u| u[0].abs().max(u[1].abs())).fold(0.0, f64::max);
        if reach > 0.5 * self.mu * self.basis.side {
            return Err(Error::Precondition(format!(
                "probe offset {reach} exceeds the injectivity bound {}",
                0.5 * self.mu * self.basis.side
            )));
        }
        Ok(Box::new(PreparedSuperposition { sampler: self, offsets }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SuperpositionMode {
    /// A fresh function and base point per draw.
    Beta,
    /// `reads` base points per function.
    Alpha { reads: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionSpec {
    pub side: f64,
    pub lambda0: f64,
    pub delta: f64,
    pub patch: PatchGrid,
    pub n_draws: usize,
    pub seed: u64,
    pub mode: SuperpositionMode,
}

/// Draw `i` uses function seed `child_seed(seed, i)` in beta mode and
/// `child_seed(seed, i / reads)` with read `i % reads` in alpha mode.
pub fn sample_superposition(spec: &SuperpositionSpec) -> Result<Vec<FieldSample>> {
    let sampler = SuperpositionSampler::new(spec.side, spec.lambda0, spec.delta)?;
    if let SuperpositionMode::Alpha { reads: 0 } = spec.mode {
        return Err(Error::InvalidArgument("alpha mode needs at least one read per function".into()));
    }
    (0..spec.n_draws as u64)
        .into_par_iter()
        .map(|i| match spec.mode {
            SuperpositionMode::Beta => sampler.draw(&spec.patch, child_seed(spec.seed, i), 0),
            SuperpositionMode::Alpha { reads } => {
                let r = reads as u64;
                sampler.draw(&spec.patch, child_seed(spec.seed, i / r), i % r)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sampler(l0: f64, d: f64) -> SuperpositionSampler {
        SuperpositionSampler::new(TAU, l0, d).unwrap()
    }

    #[test]
    fn coefficients_lie_on_the_sphere() {
        let s = sampler(25.0, 0.5);
        assert_eq!(s.basis.len(), 12);
        for seed in 0..20 {
            let n: f64 = s.coefficients(seed).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_mode_superposition_is_the_mode() {
        let mut basis = sampler(25.0, 0.5).basis;
        basis.functions.truncate(1);
        let s = SuperpositionSampler::from_basis(basis).unwrap();
        let c = s.coefficients(4);
        assert_eq!(c[0].abs(), 1.0);
        let m = s.basis.functions[0];
        let x = [0.3, 1.7];
        assert_eq!(s.eval(&c, x), c[0] * m.eval(x));
        assert!((s.covariance(0.8).unwrap() - j0(0.8)).abs() < 1e-15);
    }

    #[test]
    fn empty_window_is_rejected() {
        assert!(SuperpositionSampler::new(TAU, 3.0, 0.4).is_err());
    }

    #[test]
    fn window_kernel_identities() {
        let basis = sampler(25.0, 0.5).basis;
        // diagonal has torus mean 1
        let n = 64;
        let h = TAU / n as f64;
        let mean = (0..n * n)
            .map(|k| {
                let x = [(k / n) as f64 * h, (k % n) as f64 * h];
                window_kernel(&basis, x, x).unwrap()
            })
            .sum::<f64>()
            / (n * n) as f64;
        assert!((mean - 1.0).abs() < 1e-12);
        // translation acts on each mode as a phase shift
        let (x, y, v) = ([0.4, 1.1], [2.9, 5.0], [0.77, -3.2]);
        let shifted = window_kernel(&basis, [x[0] + v[0], x[1] + v[1]], [y[0] + v[0], y[1] + v[1]]).unwrap();
        let phase = basis
            .functions
            .iter()
            .map(|m| {
                // each cos/sin pair contributes 2 cos(xi . (x - y))
                (m.xi[0] * (x[0] - y[0]) + m.xi[1] * (x[1] - y[1])).cos()
            })
            .sum::<f64>()
            / basis.len() as f64;
        assert!((shifted - phase).abs() < 1e-12);
    }

    #[test]
    fn draws_regenerate_from_their_manifest() {
        let s = sampler(100.0, 0.5);
        let patch = PatchGrid::new(PointFrame::origin(2), 3.0, 7).unwrap();
        let f = s.draw(&patch, 99, 2).unwrap();
        assert_eq!(f.manifest().regenerate().unwrap(), f);
        let too_big = PatchGrid::new(PointFrame::origin(2), 40.0, 7).unwrap();
        assert!(s.draw(&too_big, 1, 0).is_err());
    }

    #[test]
    fn alpha_mode_shares_functions() {
        let patch = PatchGrid::new(PointFrame::origin(2), 1.0, 3).unwrap();
        let spec = SuperpositionSpec {
            side: TAU,
            lambda0: 25.0,
            delta: 0.5,
            patch,
            n_draws: 6,
            seed: 5,
            mode: SuperpositionMode::Alpha { reads: 3 },
        };
        let draws = sample_superposition(&spec).unwrap();
        assert_eq!(draws[0].seed, draws[2].seed);
        assert_ne!(draws[0].seed, draws[3].seed);
        assert_ne!(draws[0].patch.center, draws[1].patch.center);
    }
}

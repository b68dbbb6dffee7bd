//! Model spaces, framed base points, patch grids and the base-point sampling
//! map that lifts a torus function to a Euclidean patch.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldDescriptor, FieldSample};
use crate::rng::{self, LabRng};

/// The ambient geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Euclidean { dim: usize },
    /// Unit disc with curvature -1.
    HyperbolicDisc,
    /// Square torus `R^2 / (side Z)^2`.
    FlatTorus { side: f64 },
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("Euclidean dimension must be >= 1".into()));
        }
        Ok(Space::Euclidean { dim })
    }

    pub fn flat_torus(side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("torus side must be positive, got {side}")));
        }
        Ok(Space::FlatTorus { side })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Space::Euclidean { dim } => dim,
            Space::HyperbolicDisc | Space::FlatTorus { .. } => 2,
        }
    }

    /// Half-sum of positive roots; only defined for the disc.
    pub fn rho(&self) -> Option<f64> {
        match self {
            Space::HyperbolicDisc => Some(0.5),
            _ => None,
        }
    }

    /// Laplace eigenvalue attached to spectral parameter `s`
    /// (`1/4 + s^2` on the disc, `s^2` on flat spaces).
    pub fn laplace_eigenvalue(&self, s: f64) -> f64 {
        match self {
            Space::HyperbolicDisc => 0.25 + s * s,
            _ => s * s,
        }
    }

    /// Total volume, when finite.
    pub fn volume(&self) -> Option<f64> {
        match *self {
            Space::FlatTorus { side } => Some(side * side),
            _ => None,
        }
    }

    pub fn torus_side(&self) -> Result<f64> {
        match *self {
            Space::FlatTorus { side } => Ok(side),
            other => Err(Error::InvalidArgument(format!("expected a flat torus, got {other:?}"))),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, space has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if let Space::HyperbolicDisc = self {
            if x[0] * x[0] + x[1] * x[1] >= 1.0 {
                return Err(Error::Domain(format!("point ({}, {}) is not inside the unit disc", x[0], x[1])));
            }
        }
        Ok(())
    }

    /// Point at frame offset `u` from `center`.
    ///
    /// Flat spaces use `center + R(angle) u` (reduced modulo the lattice on
    /// the torus; a third Euclidean coordinate is carried over unchanged).
    /// The disc uses the exponential map at the center, so `|u|` is the
    /// geodesic distance to the center.
    pub fn offset_point(&self, center: &PointFrame, u: [f64; 2]) -> Vec<f64> {
        let (s, c) = center.angle.sin_cos();
        let ru = [c * u[0] - s * u[1], s * u[0] + c * u[1]];
        match *self {
            Space::Euclidean { .. } => {
                let mut p = center.point.clone();
                p[0] += ru[0];
                if p.len() > 1 {
                    p[1] += ru[1];
                }
                p
            }
            Space::FlatTorus { side } => vec![
                (center.point[0] + ru[0]).rem_euclid(side),
                (center.point[1] + ru[1]).rem_euclid(side),
            ],
            Space::HyperbolicDisc => {
                let z = disc_exp(center.disc_point(), ru);
                vec![z.re, z.im]
            }
        }
    }
}

/// Exponential map of the disc at `z0` applied to tangent vector `v`
/// (tangent coordinates normalized so `|v|` is geodesic length).
pub fn disc_exp(z0: Complex64, v: [f64; 2]) -> Complex64 {
    let len = v[0].hypot(v[1]);
    if len == 0.0 {
        return z0;
    }
    let w = Complex64::new(v[0], v[1]) * ((0.5 * len).tanh() / len);
    (w + z0) / (Complex64::new(1.0, 0.0) + z0.conj() * w)
}

/// Hyperbolic distance in the disc model.
pub fn disc_distance(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    2.0 * (num / den).min(1.0).atanh()
}

/// Distance between two points of `space`.
pub fn distance(space: &Space, x: &[f64], y: &[f64]) -> Result<f64> {
    space.check_point(x)?;
    space.check_point(y)?;
    Ok(match *space {
        Space::Euclidean { .. } => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        Space::FlatTorus { side } => {
            let wrap = |d: f64| {
                let d = (d).rem_euclid(side);
                d.min(side - d)
            };
            wrap(x[0] - y[0]).hypot(wrap(x[1] - y[1]))
        }
        Space::HyperbolicDisc => disc_distance(Complex64::new(x[0], x[1]), Complex64::new(y[0], y[1])),
    })
}

/// Multiplies every distance by `r`, so eigenvalues scale by `1/r^2`.
pub fn rescale_metric(space: &Space, r: f64) -> Result<Space> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("rescaling factor must be positive, got {r}")));
    }
    match *space {
        Space::FlatTorus { side } => Space::flat_torus(side * r),
        Space::Euclidean { dim } => Ok(Space::Euclidean { dim }),
        Space::HyperbolicDisc if r == 1.0 => Ok(Space::HyperbolicDisc),
        Space::HyperbolicDisc => Err(Error::InvalidArgument(
            "rescaling the disc changes its curvature; only r = 1 is supported".into(),
        )),
    }
}

/// A base point together with an orientation-preserving frame, stored as a
/// rotation angle in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFrame {
    pub point: Vec<f64>,
    pub angle: f64,
}

impl PointFrame {
    pub fn new(point: Vec<f64>, angle: f64) -> Self {
        Self { point, angle: angle.rem_euclid(TAU) }
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.0)
    }

    /// Base point on `space`, reduced modulo the lattice for the torus and
    /// checked against the domain.
    pub fn on(space: &Space, point: Vec<f64>, angle: f64) -> Result<Self> {
        let point = match *space {
            Space::FlatTorus { side } => point.iter().map(|c| c.rem_euclid(side)).collect(),
            _ => point,
        };
        space.check_point(&point)?;
        Ok(Self::new(point, angle))
    }

    pub(crate) fn disc_point(&self) -> Complex64 {
        Complex64::new(self.point[0], *self.point.get(1).unwrap_or(&0.0))
    }

    /// Unit vectors of the frame's two axes.
    pub fn axes(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.angle.sin_cos();
        ([c, s], [-s, c])
    }
}

/// Square grid of `resolution x resolution` points with frame coordinates
/// uniform in `[-half_width, half_width]^2`. Values attached to a patch are
/// stored row-major with the first frame axis as the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub center: PointFrame,
    pub half_width: f64,
    pub resolution: usize,
}

impl PatchGrid {
    pub fn new(center: PointFrame, half_width: f64, resolution: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half_width must be positive, got {half_width}")));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!("resolution must be >= 2, got {resolution}")));
        }
        Ok(Self { center, half_width, resolution })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.resolution - 1) as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.resolution).map(|i| -self.half_width + i as f64 * h).collect()
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    /// Frame offsets of all grid points, row-major.
    pub fn offsets(&self) -> Vec<[f64; 2]> {
        let c = self.coords();
        let mut out = Vec::with_capacity(self.len());
        for &a in &c {
            for &b in &c {
                out.push([a, b]);
            }
        }
        out
    }

    pub fn probes(&self) -> Probes {
        let n = self.resolution;
        Probes::Lattice {
            origin: -self.half_width,
            spacing: self.spacing(),
            size: n,
            cells: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
        }
    }

    /// The center followed by the lattice points `k h` along both frame axes
    /// in both directions, `k = 1..=floor(half_width / h)`.
    pub fn cross_probes(&self) -> Probes {
        let h = self.spacing();
        let steps = (self.half_width / h + 1e-9).floor() as usize;
        let mut cells = vec![(steps, steps)];
        for k in 1..=steps {
            cells.extend_from_slice(&[(steps + k, steps), (steps - k, steps), (steps, steps + k), (steps, steps - k)]);
        }
        Probes::Lattice { origin: -(steps as f64) * h, spacing: h, size: 2 * steps + 1, cells }
    }
}

/// Frame offsets at which a field is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Probes {
    /// Subset of the product lattice `origin + i * spacing`, `0 <= i < size`,
    /// addressed by `(row, column)` cells.
    Lattice { origin: f64, spacing: f64, size: usize, cells: Vec<(usize, usize)> },
    Points(Vec<[f64; 2]>),
}

impl Probes {
    pub fn len(&self) -> usize {
        match self {
            Probes::Lattice { cells, .. } => cells.len(),
            Probes::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offsets(&self) -> Vec<[f64; 2]> {
        match self {
            Probes::Lattice { origin, spacing, cells, .. } => cells
                .iter()
                .map(|&(i, j)| [origin + i as f64 * spacing, origin + j as f64 * spacing])
                .collect(),
            Probes::Points(p) => p.clone(),
        }
    }
}

/// Uniform base point and frame on the torus.
pub fn sample_base(space: &Space, seed: u64) -> Result<PointFrame> {
    sample_base_with(space, &mut rng::stream(seed, 0))
}

pub fn sample_base_with(space: &Space, rng: &mut LabRng) -> Result<PointFrame> {
    let side = space.torus_side()?;
    let x = rng.random::<f64>() * side;
    let y = rng.random::<f64>() * side;
    let angle = rng.random::<f64>() * TAU;
    Ok(PointFrame::new(vec![x, y], angle))
}

/// Checks that a patch read at metric scale `mu` injects into the torus.
pub fn check_injective(space: &Space, patch: &PatchGrid, mu: f64) -> Result<()> {
    let side = space.torus_side()?;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {mu}")));
    }
    if patch.half_width > 0.5 * mu * side {
        return Err(Error::Precondition(format!(
            "patch half-width {} exceeds the injectivity bound mu L / 2 = {}",
            patch.half_width,
            0.5 * mu * side
        )));
    }
    Ok(())
}

/// Torus point seen at frame offset `u` from `base` after multiplying the
/// metric by `mu`.
#[inline]
pub fn lifted_point(side: f64, base: &PointFrame, u: [f64; 2], mu: f64) -> [f64; 2] {
    let (s, c) = base.angle.sin_cos();
    let v = [u[0] / mu, u[1] / mu];
    [
        (base.point[0] + c * v[0] - s * v[1]).rem_euclid(side),
        (base.point[1] + s * v[0] + c * v[1]).rem_euclid(side),
    ]
}

/// Pull-back of a torus function to `patch` around `base` at metric scale `mu`:
/// `value[i, j] = f(base + R(frame) u_ij / mu)`.
pub fn bs_lift(
    space: &Space,
    f: impl Fn([f64; 2]) -> f64,
    base: &PointFrame,
    patch: &PatchGrid,
    mu: f64,
) -> Result<FieldSample> {
    check_injective(space, patch, mu)?;
    let side = space.torus_side()?;
    let values = patch
        .offsets()
        .into_iter()
        .map(|u| f(lifted_point(side, base, u, mu)))
        .collect();
    let lifted = PatchGrid { center: base.clone(), ..patch.clone() };
    FieldSample::new(lifted, values, FieldDescriptor::Lift { side, mu }, 0)
}

/// Signed horocycle distance `<z, b>`: `log[(1 - |z|^2) / |z - b|^2]` for the
/// boundary point `b = e^{i angle}`.
pub fn horocycle_bracket(z: Complex64, boundary_angle: f64) -> Result<f64> {
    let r2 = z.norm_sqr();
    if r2 >= 1.0 || !r2.is_finite() {
        return Err(Error::Domain(format!("{z} is not inside the unit disc")));
    }
    let b = Complex64::from_polar(1.0, boundary_angle);
    Ok((-r2).ln_1p() - (z - b).norm_sqr().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        let e2 = Space::euclidean(2).unwrap();
        assert_eq!(distance(&e2, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let t = Space::flat_torus(10.0).unwrap();
        assert!((distance(&t, &[0.0, 0.0], &[9.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let z = (0.5f64).tanh();
        let d = distance(&Space::HyperbolicDisc, &[0.0, 0.0], &[z, 0.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disc_rejects_boundary_points() {
        let err = distance(&Space::HyperbolicDisc, &[1.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(horocycle_bracket(Complex64::new(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let t = Space::flat_torus(TAU).unwrap();
        assert_eq!(rescale_metric(&t, 2.0).unwrap(), Space::FlatTorus { side: 2.0 * TAU });
        assert_eq!(rescale_metric(&t, 1.0).unwrap(), t);
        assert!(rescale_metric(&t, 0.0).is_err());
        assert!(rescale_metric(&t, -1.0).is_err());
        assert!(Space::flat_torus(0.0).is_err());
        assert!(Space::euclidean(0).is_err());
    }

    #[test]
    fn disc_metadata() {
        assert_eq!(Space::HyperbolicDisc.rho(), Some(0.5));
        assert_eq!(Space::HyperbolicDisc.laplace_eigenvalue(1.0), 1.25);
    }

    #[test]
    fn horocycle_examples() {
        assert!(horocycle_bracket(Complex64::new(0.0, 0.0), 1.3).unwrap().abs() < 1e-16);
        let z = Complex64::new(0.5, 0.0);
        assert!((horocycle_bracket(z, 0.0).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((horocycle_bracket(z, std::f64::consts::PI).unwrap() + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sample_base_is_deterministic_and_uniform() {
        let t = Space::flat_torus(1.0).unwrap();
        assert_eq!(sample_base(&t, 42).unwrap(), sample_base(&t, 42).unwrap());
        assert_ne!(sample_base(&t, 42).unwrap(), sample_base(&t, 43).unwrap());

        let n = 100_000;
        let mut counts = [0usize; 100];
        let mut mean_x = 0.0;
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let b = sample_base(&t, i as u64).unwrap();
            mean_x += b.point[0];
            let cx = (b.point[0] * 10.0) as usize;
            let cy = (b.point[1] * 10.0) as usize;
            counts[cx.min(9) * 10 + cy.min(9)] += 1;
            angles.push(b.angle / TAU);
        }
        mean_x /= n as f64;
        assert!((mean_x - 0.5).abs() < 0.01);

        // chi-square on 100 cells, 99 dof: p > 0.001 <=> chi2 < 148.2
        let expect = n as f64 / 100.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < 148.2, "chi2 = {chi2}");

        // KS against the uniform law, critical value at 0.01 is 1.628 / sqrt(n)
        angles.sort_by(f64::total_cmp);
        let ks = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| ((i + 1) as f64 / n as f64 - a).max(a - i as f64 / n as f64))
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / (n as f64).sqrt(), "ks = {ks}");
    }

    #[test]
    fn lift_examples() {
        let t = Space::flat_torus(TAU).unwrap();
        let patch = PatchGrid::new(PointFrame::origin(2), 1.0, 5).unwrap();
        let base = PointFrame::new(vec![0.0, 0.0], 0.0);
        let ones = bs_lift(&t, |_| 1.0, &base, &patch, 1.0).unwrap();
        assert!(ones.values.iter().all(|&v| v == 1.0));

        let c = bs_lift(&t, |x| x[0].cos(), &base, &patch, 1.0).unwrap();
        for (v, u) in c.values.iter().zip(patch.offsets()) {
            assert!((v - u[0].cos()).abs() < 1e-15);
        }
        let rotated = PointFrame::new(vec![0.0, 0.0], std::f64::consts::FRAC_PI_2);
        let c = bs_lift(&t, |x| x[0].cos(), &rotated, &patch, 1.0).unwrap();
        for (v, u) in c.values.iter().zip(patch.offsets()) {
            assert!((v - u[1].cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn lift_rejects_non_injective_patch() {
        let t = Space::flat_torus(1.0).unwrap();
        let patch = PatchGrid::new(PointFrame::origin(2), 3.0, 5).unwrap();
        let err = bs_lift(&t, |_| 0.0, &PointFrame::origin(2), &patch, 2.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn disc_exponential_coordinates_are_geodesic() {
        let center = PointFrame::new(vec![0.3, -0.2], 0.7);
        for u in [[0.5, 0.0], [0.3, -1.1], [2.0, 1.5]] {
            let p = Space::HyperbolicDisc.offset_point(&center, u);
            let d = distance(&Space::HyperbolicDisc, &center.point, &p).unwrap();
            assert!((d - u[0].hypot(u[1])).abs() < 1e-12);
        }
    }

    fn random_point(space: &Space, a: f64, b: f64, c: f64) -> Vec<f64> {
        match space {
            Space::Euclidean { dim } => vec![a, b, c][..*dim].to_vec(),
            Space::FlatTorus { side } => vec![a.rem_euclid(*side), b.rem_euclid(*side)],
            Space::HyperbolicDisc => {
                let r = 0.999 * (a.abs() / 10.0).tanh();
                vec![r * b.cos(), r * b.sin()]
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn triangle_inequality(x in proptest::array::uniform3(-10.0..10.0f64),
                               y in proptest::array::uniform3(-10.0..10.0f64),
                               z in proptest::array::uniform3(-10.0..10.0f64)) {
            for space in [Space::Euclidean { dim: 3 }, Space::FlatTorus { side: 3.0 }, Space::HyperbolicDisc] {
                let p = random_point(&space, x[0], x[1], x[2]);
                let q = random_point(&space, y[0], y[1], y[2]);
                let r = random_point(&space, z[0], z[1], z[2]);
                let pq = distance(&space, &p, &q).unwrap();
                let qr = distance(&space, &q, &r).unwrap();
                let pr = distance(&space, &p, &r).unwrap();
                prop_assert!(pr <= pq + qr + 1e-12 * (1.0 + pr));
                prop_assert!((pq - distance(&space, &q, &p).unwrap()).abs() < 1e-12);
                prop_assert_eq!(distance(&space, &p, &p).unwrap(), 0.0);
            }
        }

        #[test]
        fn lift_composes_with_scale(mu in 0.5..4.0f64, r in 0.0..1.0f64, theta in 0.0..TAU,
                                    bx in 0.0..TAU, by in 0.0..TAU, angle in 0.0..TAU) {
            let side = TAU;
            let base = PointFrame::new(vec![bx, by], angle);
            let u = [r * theta.cos(), r * theta.sin()];
            let a = lifted_point(side, &base, u, mu);
            let b = lifted_point(side, &base, [2.0 * u[0], 2.0 * u[1]], 2.0 * mu);
            prop_assert_eq!(a, b);
        }
    }
}

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldDescriptor, FieldSample};

/// Replacement for exact zeros before sign classification.
pub const ZERO_SHIFT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    pub domain_count: usize,
    pub boundary_touching: usize,
    pub patch_area: f64,
    /// `(domain_count - boundary_touching / 2) / patch_area`.
    pub count_density: f64,
}

impl NodalReport {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "count,touching,area,density")?;
        writeln!(w, "{},{},{},{}", self.domain_count, self.boundary_touching, self.patch_area, self.count_density)?;
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Sign components of an `n x n` row-major grid under 4-connectivity.
pub fn nodal_count_grid(values: &[f64], n: usize, area: f64) -> Result<NodalReport> {
    if n == 0 || values.len() != n * n {
        return Err(Error::InvalidArgument(format!("{} values for an {n}x{n} grid", values.len())));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::Precondition("sample vanishes identically".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("values must be finite".into()));
    }
    let sign: Vec<bool> = values.iter().map(|&v| (if v == 0.0 { ZERO_SHIFT } else { v }) > 0.0).collect();
    let mut uf = UnionFind::new(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if j + 1 < n && sign[k] == sign[k + 1] {
                uf.union(k, k + 1);
            }
            if i + 1 < n && sign[k] == sign[k + n] {
                uf.union(k, k + n);
            }
        }
    }
    let mut is_root = vec![false; n * n];
    let mut touching = vec![false; n * n];
    for k in 0..n * n {
        let r = uf.find(k);
        is_root[r] = true;
        let (i, j) = (k / n, k % n);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            touching[r] = true;
        }
    }
    let domain_count = is_root.iter().filter(|&&b| b).count();
    let boundary_touching = touching.iter().filter(|&&b| b).count();
    Ok(NodalReport {
        domain_count,
        boundary_touching,
        patch_area: area,
        count_density: (domain_count as f64 - 0.5 * boundary_touching as f64) / area,
    })
}

/// Wavelength of a sample in patch coordinates, when the model fixes one.
pub fn sample_wavelength(spec: &FieldDescriptor) -> Option<f64> {
    match spec {
        FieldDescriptor::Euclidean(s) => Some(TAU / s.mu),
        FieldDescriptor::BesselPolar(s) => Some(TAU / s.mu),
        FieldDescriptor::Hyperbolic(s) if s.s > 0.0 => Some(TAU / s.s),
        FieldDescriptor::InvariantSine | FieldDescriptor::Superposition { .. } => Some(TAU),
        _ => None,
    }
}

/// Nodal domains of a sample; the grid must carry at least 10 nodes per
/// wavelength.
pub fn nodal_count(sample: &FieldSample) -> Result<NodalReport> {
    let h = sample.patch.spacing();
    if let Some(wl) = sample_wavelength(&sample.spec) {
        if wl / h < 10.0 {
            return Err(Error::Precondition(format!(
                "{:.2} grid nodes per wavelength, need at least 10",
                wl / h
            )));
        }
    }
    nodal_count_grid(&sample.values, sample.resolution(), sample.patch.area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PatchGrid, PointFrame};
    use crate::rng;
    use crate::waves::{EuclideanWave, EuclideanWaveSpec, FieldSampler};
    use rand::Rng;
    use std::collections::VecDeque;
    use std::f64::consts::PI;

    /// Cell-centered samples of `f` on `[0, top]^2`.
    fn grid(n: usize, top: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let h = top / n as f64;
        (0..n * n).map(|k| f(((k / n) as f64 + 0.5) * h, ((k % n) as f64 + 0.5) * h)).collect()
    }

    fn flood_fill(signs: &[bool], n: usize) -> (usize, usize) {
        let mut seen = vec![false; n * n];
        let (mut count, mut touching) = (0, 0);
        for start in 0..n * n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut edge = false;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(k) = queue.pop_front() {
                let (i, j) = ((k / n) as isize, (k % n) as isize);
                edge |= i == 0 || j == 0 || i == n as isize - 1 || j == n as isize - 1;
                for (di, dj) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                        continue;
                    }
                    let m = a as usize * n + b as usize;
                    if !seen[m] && signs[m] == signs[k] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
            touching += edge as usize;
        }
        (count, touching)
    }

    #[test]
    fn constant_sign() {
        let r = nodal_count_grid(&[2.0; 16], 4, 1.0).unwrap();
        assert_eq!((r.domain_count, r.boundary_touching), (1, 1));
        assert!(nodal_count_grid(&[0.0; 16], 4, 1.0).is_err());
        let mut v = vec![0.0; 16];
        v[5] = -1.0;
        assert_eq!(nodal_count_grid(&v, 4, 1.0).unwrap().domain_count, 2);
    }

    #[test]
    fn strips_and_checkerboard() {
        let strips = grid(200, 4.0 * PI, |x, _| x.sin());
        assert_eq!(nodal_count_grid(&strips, 200, 16.0 * PI * PI).unwrap().domain_count, 4);
        let board = grid(100, TAU, |x, y| x.sin() * y.sin());
        let r = nodal_count_grid(&board, 100, TAU * TAU).unwrap();
        assert_eq!((r.domain_count, r.boundary_touching), (4, 4));
        assert_eq!(r.count_density, 2.0 / (TAU * TAU));
    }

    #[test]
    fn agrees_with_flood_fill_on_random_grids() {
        for inst in 0..100u64 {
            let mut r = rng::stream(42, inst);
            let n = 1 + (inst as usize * 7) % 64;
            let n = if inst < 50 { n } else { 64 };
            let p = r.random::<f64>();
            let v: Vec<f64> = (0..n * n).map(|_| if r.random::<f64>() < p { 1.0 } else { -1.0 }).collect();
            let signs: Vec<bool> = v.iter().map(|&x| x > 0.0).collect();
            let got = nodal_count_grid(&v, n, 1.0).unwrap();
            assert_eq!((got.domain_count, got.boundary_touching), flood_fill(&signs, n), "instance {inst}");
        }
    }

    #[test]
    fn resolution_precondition() {
        let wave = EuclideanWave::new(EuclideanWaveSpec { dim: 2, mu: 2.0, n_directions: 32 }).unwrap();
        let coarse = PatchGrid::new(PointFrame::origin(2), 10.0, 40).unwrap();
        assert!(nodal_count(&wave.sample(&coarse, 1).unwrap()).is_err());
        let fine = PatchGrid::new(PointFrame::origin(2), 10.0, 80).unwrap();
        assert!(nodal_count(&wave.sample(&fine, 1).unwrap()).unwrap().domain_count >= 1);
    }
}

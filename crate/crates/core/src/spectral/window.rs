use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Space;

/// Eigenvalue interval `[lambda0 - delta, lambda0 + delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub lambda0: f64,
    pub delta: f64,
}

impl SpectralWindow {
    pub fn new(lambda0: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite() && lambda0.is_finite()) || lambda0 - delta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "window needs delta > 0 and lambda0 - delta > 0, got lambda0 = {lambda0}, delta = {delta}"
            )));
        }
        Ok(Self { lambda0, delta })
    }

    pub fn lower(&self) -> f64 {
        self.lambda0 - self.delta
    }

    pub fn upper(&self) -> f64 {
        self.lambda0 + self.delta
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower() <= lambda && lambda <= self.upper()
    }
}

/// One step of a shrinking-window schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSchedule {
    pub index: usize,
    pub big_r: f64,
    pub r: f64,
    pub alpha: f64,
    pub delta: f64,
    pub beta_prime: f64,
}

impl WindowSchedule {
    pub const DEFAULT_BETA_PRIME: f64 = 0.5;

    /// `r = c' R` and the narrowest admissible window `delta = r^{-beta'}`.
    pub fn from_radius(index: usize, big_r: f64, c_prime: f64, alpha: f64, beta_prime: f64) -> Result<Self> {
        if !(c_prime > 0.0 && c_prime < 1.0) {
            return Err(Error::InvalidArgument(format!("c' must lie in (0, 1), got {c_prime}")));
        }
        let r = c_prime * big_r;
        Self::new(index, big_r, r, alpha, r.powf(-beta_prime), beta_prime, c_prime)
    }

    pub fn new(
        index: usize,
        big_r: f64,
        r: f64,
        alpha: f64,
        delta: f64,
        beta_prime: f64,
        c_prime: f64,
    ) -> Result<Self> {
        if !(big_r > 0.0 && r > 0.0 && delta > 0.0) {
            return Err(Error::InvalidArgument("R_n, r_n and delta_n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha_n must lie in [0, 1], got {alpha}")));
        }
        if !(beta_prime > 0.0 && beta_prime < 1.0) {
            return Err(Error::InvalidArgument(format!("beta' must lie in (0, 1), got {beta_prime}")));
        }
        if r > c_prime * big_r * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("r_n = {r} exceeds c' R_n = {}", c_prime * big_r)));
        }
        if delta < r.powf(-beta_prime) * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "delta_n = {delta} is narrower than r_n^-beta' = {}",
                r.powf(-beta_prime)
            )));
        }
        Ok(Self { index, big_r, r, alpha, delta, beta_prime })
    }

    /// `r_n vol(B(e, r_n)) alpha_n` with the hyperbolic ball volume.
    pub fn smallness(&self) -> f64 {
        self.r * TAU * (self.r.cosh() - 1.0) * self.alpha
    }

    /// Checks that the smallness product strictly decreases along `steps`.
    pub fn check_sequence(steps: &[WindowSchedule]) -> Result<()> {
        for w in steps.windows(2) {
            if w[1].smallness() >= w[0].smallness() {
                return Err(Error::InvalidArgument(format!(
                    "r vol(B_r) alpha does not decrease between steps {} and {}",
                    w[0].index, w[1].index
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Cos,
    Sin,
}

/// `sqrt 2 cos(xi . x)` or `sqrt 2 sin(xi . x)`, `xi = (2 pi / L) (m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusMode {
    pub lattice: [i64; 2],
    pub xi: [f64; 2],
    pub eigenvalue: f64,
    pub parity: Parity,
}

impl TorusMode {
    pub fn frequency(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let p = self.xi[0] * x[0] + self.xi[1] * x[1];
        std::f64::consts::SQRT_2
            * match self.parity {
                Parity::Cos => p.cos(),
                Parity::Sin => p.sin(),
            }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusEigenbasis {
    pub side: f64,
    pub window: SpectralWindow,
    /// Every dual-lattice vector in the window, lexicographic in `(m, n)`.
    pub vectors: Vec<[i64; 2]>,
    /// Real orthonormal functions: a cosine and a sine per `+-xi` pair.
    pub functions: Vec<TorusMode>,
}

impl TorusEigenbasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn space(&self) -> Space {
        Space::FlatTorus { side: self.side }
    }

    pub fn max_frequency(&self) -> f64 {
        self.functions.iter().map(TorusMode::frequency).fold(0.0, f64::max)
    }
}

fn lattice_eigenvalue(side: f64, m: i64, n: i64) -> f64 {
    let q = TAU / side;
    q * q * (m * m + n * n) as f64
}

/// All `xi in (2 pi / L) Z^2` with `|xi|^2` in the window.
pub fn enumerate_window(space: &Space, window: &SpectralWindow) -> Result<TorusEigenbasis> {
    let side = space.torus_side()?;
    let q = TAU / side;
    let bound = (window.upper().sqrt() / q).floor() as i64 + 1;
    let mut vectors = Vec::new();
    for m in -bound..=bound {
        let rest = window.upper() / (q * q) - (m * m) as f64;
        if rest < 0.0 {
            continue;
        }
        let nb = rest.sqrt().floor() as i64 + 1;
        for n in -nb..=nb {
            if window.contains(lattice_eigenvalue(side, m, n)) {
                vectors.push([m, n]);
            }
        }
    }
    let mut functions = Vec::with_capacity(vectors.len());
    for &[m, n] in &vectors {
        if m > 0 || (m == 0 && n > 0) {
            let xi = [q * m as f64, q * n as f64];
            let eigenvalue = lattice_eigenvalue(side, m, n);
            for parity in [Parity::Cos, Parity::Sin] {
                functions.push(TorusMode { lattice: [m, n], xi, eigenvalue, parity });
            }
        }
    }
    Ok(TorusEigenbasis { side, window: *window, vectors, functions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylCount {
    pub lambda0: f64,
    pub delta: f64,
    pub count: usize,
    pub prediction: f64,
    pub rel_error: f64,
}

/// Exact window count against the flat Weyl prediction `2 delta pi (L / 2 pi)^2`.
pub fn weyl_window_count(space: &Space, window: &SpectralWindow) -> Result<WeylCount> {
    let side = space.torus_side()?;
    let count = enumerate_window(space, window)?.vectors.len();
    let prediction = 2.0 * window.delta * PI * (side / TAU).powi(2);
    Ok(WeylCount {
        lambda0: window.lambda0,
        delta: window.delta,
        count,
        prediction,
        rel_error: (count as f64 - prediction).abs() / prediction,
    })
}

//! Separable test kernels `A(x, y) = a(x) k(d(x, y))` on the flat torus and
//! the eigenfunction matrix-element statistics built from them.
//!
//! Outer integrals use the probability measure of the torus, the inner
//! convolution uses Lebesgue measure, so for a plane wave `phi`
//! `<phi, A phi> = k^(|xi|) int a |phi|^2` with `k^` the 2D radial
//! transform `2 pi int k(r) J_0(rho r) r dr`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{hankel_transform, Parity, RadialKernel, SpectralWindow, TorusEigenbasis, TorusMode};
use crate::special::j0;

/// Position amplitude `a(x)` on the torus of side `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Amplitude {
    Constant { value: f64 },
    /// `cos(2 pi (m x_1 + n x_2) / L)`.
    Cosine { lattice: [i64; 2] },
    /// `P_r(2 pi x_1 / L) P_r(2 pi x_2 / L) - 1` with the Poisson kernel
    /// `P_r(t) = (1 - r^2) / (1 - 2 r cos t + r^2)`; its Fourier coefficients
    /// are `r^{|j| + |k|}` off the origin.
    PoissonProduct { r: f64 },
    Shifted { base: Box<Amplitude>, shift: f64 },
}

impl Amplitude {
    /// `one`, `const:<c>`, `cos1`, `cos:<m>:<n>`, `poisson:<r>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown amplitude {spec:?}"));
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
        let a = match parts.as_slice() {
            ["one"] => Amplitude::Constant { value: 1.0 },
            ["const", c] => Amplitude::Constant { value: num(c)? },
            ["cos1"] => Amplitude::Cosine { lattice: [1, 0] },
            ["cos", m, n] => Amplitude::Cosine { lattice: [int(m)?, int(n)?] },
            ["poisson", r] => Amplitude::PoissonProduct { r: num(r)? },
            _ => return Err(bad()),
        };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Amplitude::PoissonProduct { r } if !(0.0..1.0).contains(r) => {
                Err(Error::InvalidArgument(format!("Poisson parameter must lie in [0, 1), got {r}")))
            }
            Amplitude::Shifted { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    pub fn shifted(self, shift: f64) -> Self {
        Amplitude::Shifted { base: Box::new(self), shift }
    }

    pub fn eval(&self, x: [f64; 2], side: f64) -> f64 {
        let q = TAU / side;
        match self {
            Amplitude::Constant { value } => *value,
            Amplitude::Cosine { lattice } => (q * (lattice[0] as f64 * x[0] + lattice[1] as f64 * x[1])).cos(),
            Amplitude::PoissonProduct { r } => {
                let p = |t: f64| (1.0 - r * r) / (1.0 - 2.0 * r * t.cos() + r * r);
                p(q * x[0]) * p(q * x[1]) - 1.0
            }
            Amplitude::Shifted { base, shift } => base.eval(x, side) + shift,
        }
    }

    /// Grid points per axis needed to resolve the amplitude itself.
    fn resolution_hint(&self) -> usize {
        match self {
            Amplitude::Constant { .. } => 8,
            Amplitude::Cosine { lattice } => 8 * (lattice[0].unsigned_abs().max(lattice[1].unsigned_abs()) as usize + 1),
            // coefficients r^n fall below 1e-16 at n = 37 / (1 - r)
            Amplitude::PoissonProduct { r } => (37.0 / (1.0 - r)).ceil() as usize,
            Amplitude::Shifted { base, .. } => base.resolution_hint(),
        }
    }

    fn grid(&self, side: f64, n: usize) -> Vec<f64> {
        let h = side / n as f64;
        (0..n * n).into_par_iter().map(|k| self.eval([(k / n) as f64 * h, (k % n) as f64 * h], side)).collect()
    }
}

/// Torus mean of `a`, exact for every variant.
pub fn amplitude_mean(a: &Amplitude) -> f64 {
    match a {
        Amplitude::Constant { value } => *value,
        Amplitude::Cosine { lattice } => f64::from(*lattice == [0, 0]),
        Amplitude::PoissonProduct { .. } => 0.0,
        Amplitude::Shifted { base, shift } => amplitude_mean(base) + shift,
    }
}

const MAX_GRID: usize = 8192;

#[derive(Debug, Clone)]
pub struct TestKernel {
    pub amplitude: Amplitude,
    pub radial: RadialKernel,
    pub side: f64,
}

impl TestKernel {
    pub fn new(amplitude: Amplitude, radial: RadialKernel, side: f64) -> Result<Self> {
        amplitude.validate()?;
        if radial.support() >= 0.5 * side {
            return Err(Error::Precondition(format!(
                "kernel support {} must be below half the torus side {}",
                radial.support(),
                0.5 * side
            )));
        }
        Ok(Self { amplitude, radial, side })
    }

    /// `[A]`, the kernel with the amplitude replaced by its mean.
    pub fn averaged(&self) -> Self {
        let value = amplitude_mean(&self.amplitude);
        Self { amplitude: Amplitude::Constant { value }, ..self.clone() }
    }
}

/// `[A]_r = mean(a) k(r)`.
pub fn geodesic_average(kernel: &TestKernel, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("r must be >= 0, got {r}")));
    }
    Ok(amplitude_mean(&kernel.amplitude) * kernel.radial.eval(r))
}

/// `<A>_lambda = mean(a) 2 pi int k(r) J_0(sqrt(lambda) r) r dr`.
pub fn expected_value(kernel: &TestKernel, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let mean = amplitude_mean(&kernel.amplitude);
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok(mean * hankel_transform(&kernel.radial, lambda.sqrt())?)
}

/// `int a |phi_j|^2` under the probability measure for every mode at once.
/// With `|phi|^2 = 1 +- cos(2 xi . x)` this is `mean(a) +- Re sum a e^{2 i xi x}`,
/// evaluated as nested row sums on a periodic grid.
fn weighted_norms(a: &Amplitude, side: f64, modes: &[TorusMode]) -> Result<Vec<f64>> {
    let max_freq = modes.iter().map(TorusMode::frequency).fold(0.0, f64::max);
    let per_wavelength = (8.0 * max_freq * side / TAU).ceil() as usize;
    let mut n = per_wavelength.max(a.resolution_hint()).max(16).next_power_of_two();
    if n > MAX_GRID / 2 {
        return Err(Error::numeric("matrix element", format!("needs {n} points per axis, limit is {MAX_GRID}")));
    }
    let mut prev = norms_on_grid(a, side, modes, n);
    loop {
        n *= 2;
        let cur = norms_on_grid(a, side, modes, n);
        let change = cur.iter().zip(&prev).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if change < 1e-8 {
            return Ok(cur);
        }
        if n >= MAX_GRID {
            return Err(Error::numeric("matrix element", format!("grid change {change:.2e} at {n} points per axis")));
        }
        prev = cur;
    }
}

fn norms_on_grid(a: &Amplitude, side: f64, modes: &[TorusMode], n: usize) -> Vec<f64> {
    let values = a.grid(side, n);
    let h = side / n as f64;
    let count = (n * n) as f64;
    let mean = values.iter().sum::<f64>() / count;

    // distinct second components of 2 xi, each summed along every row
    let mut columns: Vec<i64> = modes.iter().map(|m| m.lattice[1]).collect();
    columns.sort_unstable();
    columns.dedup();
    let q = TAU / side;
    let row_sums: HashMap<i64, Vec<Complex64>> = columns
        .par_iter()
        .map(|&c| {
            let phase: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * q * c as f64 * j as f64 * h)).collect();
            let sums = values
                .chunks_exact(n)
                .map(|row| row.iter().zip(&phase).map(|(v, p)| p * v).sum::<Complex64>())
                .collect();
            (c, sums)
        })
        .collect();

    modes
        .iter()
        .map(|m| {
            let sums = &row_sums[&m.lattice[1]];
            let f: Complex64 = sums
                .iter()
                .enumerate()
                .map(|(i, s)| s * Complex64::from_polar(1.0, 2.0 * q * m.lattice[0] as f64 * i as f64 * h))
                .sum();
            let oscillating = f.re / count;
            match m.parity {
                Parity::Cos => mean + oscillating,
                Parity::Sin => mean - oscillating,
            }
        })
        .collect()
}

/// `<phi, A phi>` for one basis function.
pub fn matrix_element(mode: &TorusMode, kernel: &TestKernel) -> Result<f64> {
    let w = weighted_norms(&kernel.amplitude, kernel.side, std::slice::from_ref(mode))?;
    Ok(hankel_transform(&kernel.radial, mode.frequency())? * w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEEntry {
    pub lattice: [i64; 2],
    pub parity: Parity,
    pub lambda: f64,
    pub matrix_element: f64,
    pub expected_lambda_j: f64,
    pub expected_lambda0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEReport {
    pub window: SpectralWindow,
    pub count: usize,
    pub entries: Vec<QEEntry>,
    /// `(1/N) sum |<phi_j, A phi_j> - <A>_{lambda0}|^2`; `None` for an empty window.
    pub variance_center0: Option<f64>,
    /// Same with the per-mode centering `<A>_{lambda_j}`.
    pub variance_centerj: Option<f64>,
}

pub fn variance_statistic(basis: &TorusEigenbasis, kernel: &TestKernel) -> Result<QEReport> {
    if basis.side != kernel.side {
        return Err(Error::InvalidArgument(format!("basis torus side {} differs from kernel side {}", basis.side, kernel.side)));
    }
    if basis.is_empty() {
        return Ok(QEReport {
            window: basis.window,
            count: 0,
            entries: Vec::new(),
            variance_center0: None,
            variance_centerj: None,
        });
    }
    let mean = amplitude_mean(&kernel.amplitude);
    let norms = weighted_norms(&kernel.amplitude, kernel.side, &basis.functions)?;
    let mut khat = HashMap::new();
    let mut transform = |rho: f64| -> Result<f64> {
        if let Some(&v) = khat.get(&rho.to_bits()) {
            return Ok(v);
        }
        let v = hankel_transform(&kernel.radial, rho)?;
        khat.insert(rho.to_bits(), v);
        Ok(v)
    };
    let center = mean * transform(basis.window.lambda0.sqrt())?;
    let mut entries = Vec::with_capacity(basis.len());
    for (mode, w) in basis.functions.iter().zip(norms) {
        let h = transform(mode.frequency())?;
        entries.push(QEEntry {
            lattice: mode.lattice,
            parity: mode.parity,
            lambda: mode.eigenvalue,
            matrix_element: h * w,
            expected_lambda_j: mean * h,
            expected_lambda0: center,
        });
    }
    let n = entries.len() as f64;
    let v0 = entries.iter().map(|e| (e.matrix_element - e.expected_lambda0).powi(2)).sum::<f64>() / n;
    let vj = entries.iter().map(|e| (e.matrix_element - e.expected_lambda_j).powi(2)).sum::<f64>() / n;
    Ok(QEReport {
        window: basis.window,
        count: entries.len(),
        entries,
        variance_center0: Some(v0),
        variance_centerj: Some(vj),
    })
}

/// Radial slice `A_r f(x) = a(x) * (mean of f on the circle of radius r about x)`.
#[derive(Debug, Clone)]
pub struct SliceOperator {
    pub amplitude: Amplitude,
    pub side: f64,
    pub r: f64,
    active: bool,
}

pub fn disintegrate(kernel: &TestKernel, r: f64) -> SliceOperator {
    SliceOperator {
        amplitude: kernel.amplitude.clone(),
        side: kernel.side,
        r,
        active: (0.0..=kernel.radial.support()).contains(&r),
    }
}

impl SliceOperator {
    /// Circle mean by the trapezoid rule with `nodes` points; zero outside
    /// the kernel support.
    pub fn apply(&self, f: impl Fn([f64; 2]) -> f64, x: [f64; 2], nodes: usize) -> f64 {
        if !self.active {
            return 0.0;
        }
        let mean = (0..nodes)
            .map(|k| {
                let (s, c) = (TAU * k as f64 / nodes as f64).sin_cos();
                f([x[0] + self.r * c, x[1] + self.r * s])
            })
            .sum::<f64>()
            / nodes as f64;
        self.amplitude.eval(x, self.side) * mean
    }
}

/// Circle mean of a plane wave: `J_0(|xi| r) phi_xi`.
pub fn circle_mean_factor(mode: &TorusMode, r: f64) -> f64 {
    j0(mode.frequency() * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use crate::spectral::enumerate_window;
    use crate::special::j1;

    fn torus_basis(l0: f64, d: f64) -> TorusEigenbasis {
        enumerate_window(&Space::flat_torus(TAU).unwrap(), &SpectralWindow::new(l0, d).unwrap()).unwrap()
    }

    fn unit_box() -> RadialKernel {
        RadialKernel::indicator(1.0).unwrap()
    }

    #[test]
    fn amplitude_parsing() {
        assert_eq!(Amplitude::parse("cos1").unwrap(), Amplitude::Cosine { lattice: [1, 0] });
        assert_eq!(Amplitude::parse("poisson:0.9").unwrap(), Amplitude::PoissonProduct { r: 0.9 });
        assert!(Amplitude::parse("poisson:1.5").is_err());
        assert!(Amplitude::parse("sin").is_err());
    }

    #[test]
    fn geodesic_average_examples() {
        let one = TestKernel::new(Amplitude::Constant { value: 1.0 }, unit_box(), TAU).unwrap();
        assert_eq!(geodesic_average(&one, 0.5).unwrap(), 1.0);
        assert_eq!(geodesic_average(&one, 1.5).unwrap(), 0.0);
        let c = TestKernel::new(Amplitude::parse("cos1").unwrap(), unit_box(), TAU).unwrap();
        for r in [0.0, 0.4, 0.9] {
            assert!(geodesic_average(&c, r).unwrap().abs() < 1e-15);
        }
        let shifted = TestKernel::new(Amplitude::parse("cos1").unwrap().shifted(1.0), unit_box(), TAU).unwrap();
        assert!((geodesic_average(&shifted, 0.3).unwrap() - 1.0).abs() < 1e-14);
        assert!(geodesic_average(&shifted, 1.2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn averaging_is_idempotent() {
        let k = TestKernel::new(Amplitude::PoissonProduct { r: 0.8 }.shifted(0.3), unit_box(), TAU).unwrap();
        let once = k.averaged();
        let twice = once.averaged();
        for r in [0.2, 0.7] {
            assert_eq!(geodesic_average(&once, r).unwrap(), geodesic_average(&twice, r).unwrap());
            assert!((geodesic_average(&once, r).unwrap() - geodesic_average(&k, r).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn expected_value_examples() {
        let one = TestKernel::new(Amplitude::Constant { value: 1.0 }, unit_box(), TAU).unwrap();
        assert!((expected_value(&one, 1.0).unwrap() - TAU * j1(1.0)).abs() < 1e-8);
        let c = TestKernel::new(Amplitude::parse("cos1").unwrap(), unit_box(), TAU).unwrap();
        assert_eq!(expected_value(&c, 25.0).unwrap(), 0.0);
    }

    #[test]
    fn matrix_element_examples() {
        let basis = torus_basis(25.0, 0.5);
        let one = TestKernel::new(Amplitude::Constant { value: 1.0 }, unit_box(), TAU).unwrap();
        for m in &basis.functions {
            let got = matrix_element(m, &one).unwrap();
            assert!((got - TAU * j1(5.0) / 5.0).abs() < 1e-9);
        }
        let zero = TestKernel::new(Amplitude::Constant { value: 0.0 }, unit_box(), TAU).unwrap();
        assert_eq!(matrix_element(&basis.functions[0], &zero).unwrap(), 0.0);
    }

    #[test]
    fn narrow_kernel_tends_to_multiplication() {
        // unit-mass bump of radius eps: <phi, A phi> -> int a |phi|^2
        let a = Amplitude::PoissonProduct { r: 0.5 };
        let basis = torus_basis(2.0, 0.1);
        let eps = 1e-4;
        let bump = RadialKernel::bump(eps).unwrap();
        let mass = hankel_transform(&bump, 0.0).unwrap();
        let k = TestKernel::new(a.clone(), bump.scaled(1.0 / mass), TAU).unwrap();
        for m in &basis.functions {
            let direct = {
                let n = 256;
                let h = TAU / n as f64;
                (0..n * n)
                    .map(|i| {
                        let x = [(i / n) as f64 * h, (i % n) as f64 * h];
                        a.eval(x, TAU) * m.eval(x).powi(2)
                    })
                    .sum::<f64>()
                    / (n * n) as f64
            };
            assert!((matrix_element(m, &k).unwrap() - direct).abs() < 1e-6);
        }
    }

    #[test]
    fn pure_convolution_has_no_variance() {
        let basis = torus_basis(2500.0, 0.5);
        let k = TestKernel::new(Amplitude::Constant { value: 1.0 }, unit_box(), TAU).unwrap();
        let report = variance_statistic(&basis, &k).unwrap();
        assert_eq!(report.count, basis.len());
        assert!(report.variance_centerj.unwrap() < 1e-10);
        assert!(report.variance_centerj.unwrap() <= report.variance_center0.unwrap() + 1e-20);
    }

    #[test]
    fn shifting_amplitude_keeps_deviations() {
        let basis = torus_basis(100.0, 0.5);
        let a = Amplitude::PoissonProduct { r: 0.9 };
        let k1 = TestKernel::new(a.clone(), unit_box(), TAU).unwrap();
        let k2 = TestKernel::new(a.shifted(0.7), unit_box(), TAU).unwrap();
        let r1 = variance_statistic(&basis, &k1).unwrap();
        let r2 = variance_statistic(&basis, &k2).unwrap();
        for (e1, e2) in r1.entries.iter().zip(&r2.entries) {
            let d1 = e1.matrix_element - e1.expected_lambda_j;
            let d2 = e2.matrix_element - e2.expected_lambda_j;
            assert!((d1 - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_and_empty_windows() {
        let k = TestKernel::new(Amplitude::parse("cos:0:2").unwrap(), unit_box(), TAU).unwrap();
        let mut basis = torus_basis(1.0, 0.1);
        basis.functions.truncate(1);
        let report = variance_statistic(&basis, &k).unwrap();
        let e = &report.entries[0];
        assert_eq!(report.variance_center0.unwrap(), (e.matrix_element - e.expected_lambda0).powi(2));
        let empty = torus_basis(3.0, 0.4);
        let report = variance_statistic(&empty, &k).unwrap();
        assert_eq!(report.count, 0);
        assert!(report.variance_center0.is_none());
    }

    #[test]
    fn unresolvable_amplitude_is_a_numeric_error() {
        let k = TestKernel::new(Amplitude::PoissonProduct { r: 0.9999 }, unit_box(), TAU).unwrap();
        let err = variance_statistic(&torus_basis(25.0, 0.5), &k).unwrap_err();
        assert!(err.is_numeric());
    }

    #[test]
    fn support_must_inject() {
        assert!(TestKernel::new(Amplitude::Constant { value: 1.0 }, RadialKernel::indicator(4.0).unwrap(), TAU).is_err());
    }

    #[test]
    fn slices_reassemble_the_operator() {
        let basis = torus_basis(5.0, 0.1);
        let k = TestKernel::new(Amplitude::PoissonProduct { r: 0.6 }, RadialKernel::bump(1.2).unwrap(), TAU).unwrap();
        let coeffs = [0.7, -1.3, 0.4, 2.0, -0.5, 0.9, 1.1, -0.2];
        let f = |x: [f64; 2]| basis.functions.iter().zip(&coeffs).map(|(m, c)| c * m.eval(x)).sum::<f64>();
        let x = [0.4, 2.2];

        let one = disintegrate(&k, 0.0).apply(|_| 1.0, x, 64);
        assert!((one - k.amplitude.eval(x, TAU)).abs() < 1e-14);

        let m = basis.functions[3];
        let ones = TestKernel::new(Amplitude::Constant { value: 1.0 }, k.radial.clone(), TAU).unwrap();
        let slice = disintegrate(&ones, 0.8).apply(|y| m.eval(y), x, 256);
        assert!((slice - circle_mean_factor(&m, 0.8) * m.eval(x)).abs() < 1e-12);
        assert_eq!(disintegrate(&ones, 2.0).apply(|y| m.eval(y), x, 64), 0.0);

        let rule = crate::special::CompositeRule::uniform(0.0, 1.2, 0.1, 12);
        let reassembled = rule.integrate(|r| disintegrate(&k, r).apply(f, x, 256) * k.radial.eval(r) * TAU * r);
        let exact = k.amplitude.eval(x, TAU)
            * basis
                .functions
                .iter()
                .zip(&coeffs)
                .map(|(m, c)| c * hankel_transform(&k.radial, m.frequency()).unwrap() * m.eval(x))
                .sum::<f64>();
        assert!((reassembled - exact).abs() < 1e-6 * exact.abs(), "{reassembled} vs {exact}");
    }
}

//! Spectral cutoff `chi_delta` and its truncated inverse transform
//! `F_{delta,r} = k_delta * chi(d / r)`.

use serde::{Deserialize, Serialize};

use super::transform::{forward_on_grid, inverse_on_grid, phi_table, plancherel_constant, RadialKernel};
use crate::error::{Error, Result};
use crate::special::CompositeRule;

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// `C^infinity` plateau: 1 on `|x| <= 1/2`, 0 on `|x| >= 1`.
pub fn plateau(x: f64) -> f64 {
    let x = x.abs();
    if x <= 0.5 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        let t = 2.0 - 2.0 * x;
        let a = smooth_step(t);
        a / (a + smooth_step(1.0 - t))
    }
}

/// `chi_delta(s) = chi((s - s0) / 2 delta) + chi((-s - s0) / 2 delta)`,
/// a bump around the spectral parameter `s0 = sqrt(lambda0 - 1/4)` made even
/// in `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCutoff {
    pub lambda0: f64,
    pub delta: f64,
    pub s0: f64,
}

impl SpectralCutoff {
    pub fn new(lambda0: f64, delta: f64) -> Result<Self> {
        if !(lambda0 > 0.25) {
            return Err(Error::Domain(format!("lambda0 = {lambda0} lies below the continuous spectrum [1/4, oo)")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { lambda0, delta, s0: (lambda0 - 0.25).sqrt() })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let w = 2.0 * self.delta;
        plateau((s - self.s0) / w) + plateau((-s - self.s0) / w)
    }

    pub fn s_support(&self) -> f64 {
        self.s0 + 2.0 * self.delta
    }
}

/// `k_delta`, the inverse spherical transform of a [`SpectralCutoff`].
#[derive(Debug, Clone)]
pub struct CutoffKernel {
    pub cutoff: SpectralCutoff,
    s_rule: CompositeRule,
    hat: Vec<f64>,
    constant: f64,
}

impl CutoffKernel {
    pub fn new(cutoff: SpectralCutoff) -> Result<Self> {
        let s_rule = CompositeRule::uniform(0.0, cutoff.s_support(), cutoff.delta / 8.0, 12);
        let hat = s_rule.nodes.iter().map(|&s| cutoff.eval(s)).collect();
        Ok(Self { cutoff, s_rule, hat, constant: plancherel_constant()? })
    }

    pub fn k_delta(&self, r: &[f64]) -> Result<Vec<f64>> {
        let phi = phi_table(&self.s_rule.nodes, r)?;
        let mut k = inverse_on_grid(&self.hat, &self.s_rule, &phi, r.len());
        k.iter_mut().for_each(|v| *v *= self.constant);
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub lambda0: f64,
    pub delta: f64,
    pub r_cut: f64,
    /// `sup_s |F^_{delta,r}(s) - chi_delta(s)|` on the check grid.
    pub deviation: f64,
    pub worst_s: f64,
}

fn check_grid(cutoff: &SpectralCutoff) -> Vec<f64> {
    let top = 3.0f64.max(cutoff.s0 + 4.0 * cutoff.delta);
    let n = (top / 0.05).round() as usize;
    (0..=n).map(|i| top * i as f64 / n as f64).collect()
}

/// Deviations for several truncation radii, sharing one evaluation of
/// `k_delta` on unit panels out to the largest radius.
pub fn cutoff_study(delta: f64, lambda0: f64, r_cuts: &[f64]) -> Result<Vec<CutoffReport>> {
    if r_cuts.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("truncation radii must be positive".into()));
    }
    let kernel = CutoffKernel::new(SpectralCutoff::new(lambda0, delta)?)?;
    let checks = check_grid(&kernel.cutoff);
    let target: Vec<f64> = checks.iter().map(|&s| kernel.cutoff.eval(s)).collect();
    let r_max = r_cuts.iter().cloned().fold(0.0, f64::max).ceil();
    let mut edges: Vec<f64> = (0..=r_max as usize).map(|i| i as f64).collect();
    for &r in r_cuts {
        if !edges.contains(&r) {
            edges.push(r);
        }
    }
    edges.sort_by(f64::total_cmp);
    let rule = CompositeRule::new(&edges, 16);
    let k = kernel.k_delta(&rule.nodes)?;
    let phi = phi_table(&checks, &rule.nodes)?;

    let mut out = Vec::with_capacity(r_cuts.len());
    for &r_cut in r_cuts {
        let truncated: Vec<f64> = rule.nodes.iter().zip(&k).map(|(&r, &kv)| kv * plateau(r / r_cut)).collect();
        let fhat = forward_on_grid(&truncated, &rule, &phi);
        let (deviation, worst_s) = fhat
            .iter()
            .zip(&target)
            .zip(&checks)
            .map(|((f, t), &s)| ((f - t).abs(), s))
            .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
        out.push(CutoffReport { lambda0, delta, r_cut, deviation, worst_s });
    }
    Ok(out)
}

/// The truncated kernel `F_{delta,r}` and its deviation report.
pub fn cutoff_kernel(delta: f64, r_cut: f64, lambda0: f64) -> Result<(RadialKernel, CutoffReport)> {
    let report = cutoff_study(delta, lambda0, &[r_cut])?.remove(0);
    let kernel = CutoffKernel::new(SpectralCutoff::new(lambda0, delta)?)?;
    let profile = RadialKernel::new(format!("cutoff:{delta}:{r_cut}"), r_cut, move |r| {
        kernel.k_delta(&[r]).map(|v| v[0] * plateau(r / r_cut)).unwrap_or(f64::NAN)
    })?;
    Ok((profile, report))
}

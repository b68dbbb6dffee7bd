use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::geometry::{distance, PatchGrid};
use crate::rng::child_seed;
use crate::waves::FieldSampler;

/// Binned estimate of `E[F(x) F(y)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub radii: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub theoretical: Vec<f64>,
    /// Pairs per sample in each bin.
    pub pairs: Vec<usize>,
    /// Centers of bins that received no pairs; excluded from the vectors above.
    pub empty_bins: Vec<f64>,
    pub n_samples: usize,
}

impl CovarianceEstimate {
    /// `max |mean - theoretical|` over bins with center `<= r_max`.
    pub fn max_abs_error(&self, r_max: f64) -> f64 {
        self.radii
            .iter()
            .zip(self.mean.iter().zip(&self.theoretical))
            .filter(|(r, _)| **r <= r_max + 1e-12)
            .map(|(_, (m, t))| (m - t).abs())
            .fold(0.0, f64::max)
    }

    pub fn z_scores(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.theoretical).zip(&self.stderr).map(|((m, t), s)| (m - t) / s).collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "r,empirical,stderr,theoretical")?;
        for i in 0..self.radii.len() {
            writeln!(w, "{},{},{},{}", self.radii[i], self.mean[i], self.stderr[i], self.theoretical[i])?;
        }
        Ok(())
    }
}

/// Pairs the patch center with every point on the two axes through it.
/// Bin `b` has center `b * w` with `w = r_max / (n_bins - 1)`, `r_max` the
/// largest probe distance; sample `i` uses seed `child_seed(seed, i)`.
pub fn empirical_covariance(
    sampler: &dyn FieldSampler,
    patch: &PatchGrid,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if n_samples < 100 {
        return Err(Error::Precondition(format!("need at least 100 samples, got {n_samples}")));
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    let space = sampler.space();
    let probes = patch.cross_probes();
    let center = space.offset_point(&patch.center, [0.0, 0.0]);
    let dists = probes
        .offsets()
        .iter()
        .map(|&u| distance(&space, &center, &space.offset_point(&patch.center, u)))
        .collect::<Result<Vec<f64>>>()?;
    let r_max = dists.iter().cloned().fold(0.0, f64::max);
    let width = r_max / (n_bins - 1) as f64;
    // probe 0 is the center itself
    let bin_of: Vec<usize> = dists.iter().map(|d| ((d / width).round() as usize).min(n_bins - 1)).collect();
    let mut pairs = vec![0usize; n_bins];
    let mut oracle = vec![0.0; n_bins];
    for (b, d) in bin_of.iter().zip(&dists) {
        pairs[*b] += 1;
        oracle[*b] += sampler.covariance(*d)?;
    }

    let prepared = sampler.prepare(&patch.center, &probes)?;
    let per_sample: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let v = prepared.eval(child_seed(seed, i));
            let mut acc = vec![0.0; n_bins];
            for (b, x) in bin_of.iter().zip(&v) {
                acc[*b] += v[0] * x;
            }
            for (a, p) in acc.iter_mut().zip(&pairs) {
                if *p > 0 {
                    *a /= *p as f64;
                }
            }
            acc
        })
        .collect();
    if per_sample.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numeric("covariance", "non-finite sample value"));
    }

    let n = n_samples as f64;
    let mut est = CovarianceEstimate {
        radii: Vec::new(),
        mean: Vec::new(),
        stderr: Vec::new(),
        theoretical: Vec::new(),
        pairs: Vec::new(),
        empty_bins: Vec::new(),
        n_samples,
    };
    for b in 0..n_bins {
        let r = b as f64 * width;
        if pairs[b] == 0 {
            est.empty_bins.push(r);
            continue;
        }
        let mean = per_sample.iter().map(|s| s[b]).sum::<f64>() / n;
        let var = per_sample.iter().map(|s| (s[b] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        est.radii.push(r);
        est.mean.push(mean);
        est.stderr.push((var / n).sqrt());
        est.theoretical.push(oracle[b] / pairs[b] as f64);
        est.pairs.push(pairs[b]);
    }
    Ok(est)
}

/// The same estimator applied to already drawn samples of one shape: the
/// central node paired with the nodes on the two axes through it, binned by
/// grid step. Needs an odd resolution.
pub fn sample_covariance(samples: &[FieldSample], oracle: impl Fn(f64) -> f64) -> Result<CovarianceEstimate> {
    let first = samples.first().ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
    if samples.len() < 100 {
        return Err(Error::Precondition(format!("need at least 100 samples, got {}", samples.len())));
    }
    let n = first.resolution();
    if n % 2 == 0 || samples.iter().any(|s| s.resolution() != n) {
        return Err(Error::InvalidArgument("samples need one common odd resolution".into()));
    }
    let c = n / 2;
    let h = first.patch.spacing();
    let per_sample: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let v0 = s.at(c, c);
            (0..=c)
                .map(|k| {
                    if k == 0 {
                        v0 * v0
                    } else {
                        0.25 * v0 * (s.at(c + k, c) + s.at(c - k, c) + s.at(c, c + k) + s.at(c, c - k))
                    }
                })
                .collect()
        })
        .collect();
    let m = samples.len() as f64;
    let mut est = CovarianceEstimate {
        radii: Vec::new(),
        mean: Vec::new(),
        stderr: Vec::new(),
        theoretical: Vec::new(),
        pairs: Vec::new(),
        empty_bins: Vec::new(),
        n_samples: samples.len(),
    };
    for k in 0..=c {
        let mean = per_sample.iter().map(|s| s[k]).sum::<f64>() / m;
        let var = per_sample.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let r = k as f64 * h;
        est.radii.push(r);
        est.mean.push(mean);
        est.stderr.push((var / m).sqrt());
        est.theoretical.push(oracle(r));
        est.pairs.push(if k == 0 { 1 } else { 4 });
    }
    Ok(est)
}

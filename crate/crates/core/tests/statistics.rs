use std::f64::consts::TAU;

use wavelab::geometry::{PatchGrid, PointFrame, Probes};
use wavelab::rng::child_seed;
use wavelab::stats::{
    empirical_covariance, gaussianity_report, ks_normal, sample_superposition, SuperpositionMode, SuperpositionSampler,
    SuperpositionSpec,
};
use wavelab::waves::{
    BesselPolar, EuclideanWave, EuclideanWaveSpec, FieldSampler, HyperbolicWave, HyperbolicWaveSpec, InvariantSine,
};

fn point_values(sampler: &dyn FieldSampler, n: usize, seed: u64) -> Vec<f64> {
    let p = sampler.prepare(&PointFrame::origin(2), &Probes::Points(vec![[0.0, 0.0]])).unwrap();
    (0..n as u64).map(|i| p.eval(child_seed(seed, i))[0]).collect()
}

fn plane(mu: f64) -> EuclideanWave {
    EuclideanWave::new(EuclideanWaveSpec { dim: 2, mu, n_directions: 256 }).unwrap()
}

#[test]
fn covariance_estimator_is_unbiased() {
    let patch = PatchGrid::new(PointFrame::origin(2), 8.0, 99).unwrap();
    let est = empirical_covariance(&plane(1.0), &patch, 20_000, 50, 7).unwrap();
    let z = est.z_scores();
    let mean_z = z.iter().sum::<f64>() / z.len() as f64;
    assert!(mean_z.abs() < 0.3, "mean z {mean_z}");
    assert!((est.mean[0] - 1.0).abs() < 3.0 * est.stderr[0]);
}

#[test]
fn standard_error_follows_root_n() {
    let patch = PatchGrid::new(PointFrame::origin(2), 4.0, 21).unwrap();
    let a = empirical_covariance(&plane(1.0), &patch, 2_000, 11, 3).unwrap();
    let b = empirical_covariance(&plane(1.0), &patch, 4_000, 11, 4).unwrap();
    let ratio = a.stderr.iter().zip(&b.stderr).map(|(x, y)| x / y).sum::<f64>() / a.stderr.len() as f64;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn gaussian_samplers_carry_unit_energy() {
    let samplers: Vec<(&str, Box<dyn FieldSampler>)> = vec![
        ("plane 2d", Box::new(plane(1.0))),
        ("plane 3d", Box::new(EuclideanWave::new(EuclideanWaveSpec { dim: 3, mu: 1.0, n_directions: 256 }).unwrap())),
        ("bessel", Box::new(BesselPolar::new(1.0, 40).unwrap())),
        ("hyperbolic", Box::new(HyperbolicWave::new(HyperbolicWaveSpec { s: 1.0, n_boundary: 256 }).unwrap())),
    ];
    for (i, (name, s)) in samplers.iter().enumerate() {
        let r = gaussianity_report(&point_values(s.as_ref(), 20_000, 50 + i as u64), 3.0).unwrap();
        assert!((r.energy - 1.0).abs() < 3.0 * r.energy_stderr, "{name}: {r:?}");
        assert!(r.ks_distance < 0.02, "{name}: {r:?}");
    }
}

#[test]
fn invariant_sine_is_detected_as_non_gaussian() {
    let r = gaussianity_report(&point_values(&InvariantSine, 20_000, 9), 2.0).unwrap();
    assert!(r.ks_distance > 0.05);
    assert!((r.energy - 0.5).abs() < 0.02);
}

#[test]
fn superposition_values_are_close_to_normal() {
    let s = SuperpositionSampler::new(TAU, 25.0, 0.5).unwrap();
    assert_eq!(s.basis.len(), 12);
    let ks = ks_normal(&point_values(&s, 20_000, 12));
    assert!(ks < 0.02, "KS {ks}");
}

#[test]
fn alpha_and_beta_processes_share_their_mean() {
    let patch = PatchGrid::new(PointFrame::origin(2), 2.0, 5).unwrap();
    let spec = |mode| SuperpositionSpec { side: TAU, lambda0: 100.0, delta: 0.5, patch: patch.clone(), n_draws: 8_000, seed: 77, mode };
    let sampler = SuperpositionSampler::new(TAU, 100.0, 0.5).unwrap();
    // center is cell (2, 2); cells (2, 3) and (2, 4) sit at distances 1 and 2
    for (mode, reads, seed_shift) in [(SuperpositionMode::Beta, 1.0, 0), (SuperpositionMode::Alpha { reads: 8 }, 8.0, 1)] {
        let draws = sample_superposition(&SuperpositionSpec { seed: 77 + seed_shift, ..spec(mode) }).unwrap();
        for (cell, r) in [(13usize, 1.0), (14, 2.0)] {
            let prods: Vec<f64> = draws.iter().map(|d| d.values[12] * d.values[cell]).collect();
            let n = prods.len() as f64;
            let mean = prods.iter().sum::<f64>() / n;
            let sd = (prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let expect = sampler.covariance(r).unwrap();
            // reads of one function are correlated, so only n / reads draws count
            assert!((mean - expect).abs() < 4.0 * sd * (reads / n).sqrt(), "{mode:?} r={r}: {mean} vs {expect}");
        }
    }
}

//! Simulates the null distribution of the KS distance to the standard normal
//! and prints its 99th percentile for the sample sizes used by the tests.

use rand::Rng;
use rand_distr::StandardNormal;
use wavelab::rng;
use wavelab::stats::ks_normal;

fn main() {
    let replicas = 10_000u64;
    for (k, n) in [5_000usize, 20_000].into_iter().enumerate() {
        let mut d: Vec<f64> = (0..replicas)
            .map(|i| {
                let mut r = rng::stream(0x5eed + k as u64, i);
                let v: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
                ks_normal(&v)
            })
            .collect();
        d.sort_by(f64::total_cmp);
        println!("n = {n}: q99 = {:.5}", d[(0.99 * replicas as f64) as usize]);
    }
}

//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normals(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Standard normal CDF by Simpson integration of the density from 0.
pub fn normal_cdf(x: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x >= 0.0 {
        0.5 + simpson(pdf, 0.0, x, 20_000)
    } else {
        0.5 - simpson(pdf, x, 0.0, 20_000)
    }
}

/// χ² survival by quadrature in u = √t, where
/// t^{k/2−1} e^{−t/2} dt = 2 u^{k−1} e^{−u²/2} du is smooth for every k ≥ 1.
/// The density is rescaled around its mode and normalized numerically.
pub fn chi2_survival_by_quadrature(x: f64, dof: u32) -> f64 {
    let k = dof as f64;
    let mode = (k - 1.0).max(0.0).sqrt();
    let f = |u: f64| {
        if u == 0.0 {
            return if dof == 1 { (0.5 * mode * mode).exp() } else { 0.0 };
        }
        ((k - 1.0) * (u / mode.max(1.0)).ln() - 0.5 * (u * u - mode * mode)).exp()
    };
    let upper = mode + 40.0;
    let split = x.sqrt().min(upper);
    let lower = simpson(f, 0.0, split, 200_000);
    let tail = simpson(f, split, upper, 200_000);
    tail / (lower + tail)
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use hedgecost::cost_dist::DistModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn ncdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / 2f64.sqrt())
}

pub fn gamma(x: f64, k: f64, r: f64, v: f64, tau: f64) -> f64 {
    let sd = v * tau.sqrt();
    let d1 = ((x / k).ln() + (r + 0.5 * v * v) * tau) / sd;
    (-0.5 * d1 * d1).exp() / (2.0 * PI).sqrt() / (x * sd)
}

/// `E[(a (y - 1)^2 - c)^+]` for lognormal `y = exp(m + s Z)`, in closed form.
pub fn clipped_quadratic(a: f64, c: f64, m: f64, s: f64) -> f64 {
    let moment = |n: f64| (n * m + 0.5 * n * n * s * s).exp();
    if c <= 0.0 {
        return a * (moment(2.0) - 2.0 * moment(1.0) + 1.0) - c;
    }
    if a <= 0.0 {
        return 0.0;
    }
    let d = (c / a).sqrt();
    // E[y^n; y > b] and E[y^n; y < b]
    let above = |n: f64, b: f64| moment(n) * ncdf((m + n * s * s - b.ln()) / s);
    let below = |n: f64, b: f64| moment(n) * ncdf((b.ln() - m - n * s * s) / s);
    let region = |p: f64, m1: f64, m2: f64| a * (m2 - 2.0 * m1 + p) - c * p;
    let hi = 1.0 + d;
    let mut v = region(above(0.0, hi), above(1.0, hi), above(2.0, hi));
    if d < 1.0 {
        let lo = 1.0 - d;
        v += region(below(0.0, lo), below(1.0, lo), below(2.0, lo));
    }
    v
}

/// Two-step `E[(l1 + l2 - xi)^+]` by trapezoid quadrature over the first step and
/// closed-form lognormal partial moments over the second.
pub fn brute_force_two_steps(k: f64, xi: f64, model: &DistModel) -> f64 {
    let d = model.step();
    let (r, v) = (model.rate, model.vol);
    let m = (r - 0.5 * v * v) * d;
    let s = v * d.sqrt();
    let c1 = model.alpha_prime * gamma(1.0, k, r, v, 2.0 * d).powi(2);
    let n = 40_000;
    let (za, zb) = (-9.0, 9.0);
    let h = (zb - za) / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let z = za + i as f64 * h;
        let x1 = (m + s * z).exp();
        let l1 = c1 * (x1 - 1.0).powi(2);
        let a = model.alpha_prime * x1 * gamma(x1, k, r, v, d).powi(2) * x1 * x1;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        total += w * (-0.5 * z * z).exp() * clipped_quadratic(a, xi - l1, m, s);
    }
    total * h / (2.0 * PI).sqrt()
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Time-averaged depth of a birth-death queue. The touch queue is tracked as a signed
/// count: market orders arriving at an empty touch leave a shortfall that later
/// limit orders fill, so its mean follows `dy/dt = limit - market - cancel y`.
pub fn simulate_depth(limit: f64, market: f64, cancel: f64, horizon: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut y, mut area) = (0.0, 0i64, 0.0);
    let burn_in = 20.0 / cancel;
    while t < horizon + burn_in {
        let up = limit + cancel * (-y).max(0) as f64;
        let down = market + cancel * y.max(0) as f64;
        let total = up + down;
        let dt = exp_sample(&mut rng, total);
        if t + dt > burn_in {
            area += y as f64 * (t + dt - t.max(burn_in)).min(horizon + burn_in - t.max(burn_in));
        }
        t += dt;
        if rng.random::<f64>() * total < up {
            y += 1;
        } else {
            y -= 1;
        }
    }
    area / horizon
}

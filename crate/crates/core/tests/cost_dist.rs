mod common;

use common::{brute_force_two_steps, clipped_quadratic, gamma, ncdf};
use hedgecost::cost_dist::*;

#[test]
fn two_step_recursion_matches_brute_force() {
    let model = DistModel::new(0.1, 0.05, 0.3, 1.0, 2).unwrap();
    let targets: Vec<f64> = (0..20).map(|i| 0.85 + 0.3 * i as f64 / 19.0).collect();
    let cfg = DistConfig {
        xi_max: Some(0.6),
        ..DistConfig::default()
    };
    let grid = DistGrid::build(&model, &targets, &cfg, 0.6).unwrap();
    let surface = final_surface(&model, &grid).unwrap();
    let picks: Vec<usize> = (0..20).map(|j| j * (grid.xi.len() - 1) / 19).collect();
    let mut worst = 0.0f64;
    for &k in &targets {
        let row = surface.row(surface.find(k).unwrap());
        for &j in &picks {
            let want = brute_force_two_steps(k, grid.xi[j], &model);
            worst = worst.max((row[j] - want).abs());
        }
    }
    assert!(worst < 1e-4, "max abs error {worst}");
}

#[test]
fn terminal_level_at_zero_is_mean_step_cost() {
    let model = DistModel::new(0.2, 0.05, 0.4, 1.3, 1).unwrap();
    // the kink of (l - xi)^+ needs a fine rule for a single step
    let cfg = DistConfig {
        x_nodes: 2000,
        ..DistConfig::default()
    };
    let grid = DistGrid::build(&model, &[1.0], &cfg, 1.0).unwrap();
    let m = (0.05 - 0.08) * 0.2;
    let s = 0.4 * 0.2f64.sqrt();
    for k in [0.8, 1.0, 1.25] {
        let a = 1.3 * gamma(1.0, k, 0.05, 0.4, 0.2).powi(2);
        let want = clipped_quadratic(a, 0.0, m, s);
        let got = terminal_g1(k, 0.0, &model, &grid.ratios).unwrap();
        // the one-step domain stops at six standard deviations
        assert!((got - want).abs() < 1e-6 * want, "K={k}: {got} vs {want}");
        let c = 0.5 * want;
        let got = terminal_g1(k, c, &model, &grid.ratios).unwrap();
        assert!((got - clipped_quadratic(a, c, m, s)).abs() < 1e-5 * want);
    }
}

#[test]
fn surfaces_are_decreasing_and_convex_in_cost() {
    let model = DistModel::new(0.1, 0.05, 0.3, 1.0, 10).unwrap();
    let targets = [0.9, 1.0, 1.1];
    let grid = DistGrid::build(&model, &targets, &DistConfig::default(), 1.0).unwrap();
    let s = final_surface(&model, &grid).unwrap();
    for i in 0..targets.len() {
        let g = s.row(i);
        let xi = &grid.xi;
        assert!(g.iter().all(|v| *v >= 0.0));
        for j in 1..xi.len() - 1 {
            assert!(g[j + 1] <= g[j] + 1e-12);
            let left = (g[j] - g[j - 1]) / (xi[j] - xi[j - 1]);
            let right = (g[j + 1] - g[j]) / (xi[j + 1] - xi[j]);
            assert!(right >= left - 1e-8, "row {i} node {j}: {left} > {right}");
        }
    }
}

#[test]
fn mean_matches_exact_discrete_expectation() {
    let model = DistModel::new(0.5, 0.05, 0.3, 1.0, 20).unwrap();
    let ks = [0.9, 1.0, 1.2];
    let d = cost_distributions(&model, &ks, &DistConfig::default()).unwrap();
    for (k, dist) in ks.iter().zip(&d) {
        let exact = expected_discrete_cost(*k, &model).unwrap();
        assert!(
            (dist.mean - exact).abs() < 1e-3 * exact,
            "K={k}: {} vs {exact}",
            dist.mean
        );
        assert!((dist.density_mean() - dist.mean).abs() < 0.01 * dist.mean);
        assert!((dist.mass - 1.0).abs() < 0.01);
        assert!(dist.cdf.windows(2).all(|w| w[1] >= w[0] - 1e-7));
    }
}

#[test]
fn cost_axis_scales_with_slope() {
    let base = DistModel::new(0.1, 0.05, 0.3, 1.0, 5).unwrap();
    let scaled = DistModel {
        alpha_prime: 3.0,
        ..base
    };
    let cfg = DistConfig::default();
    let a = cost_distributions(&base, &[1.0], &cfg).unwrap();
    let b = cost_distributions(&scaled, &[1.0], &cfg).unwrap();
    assert!((b[0].mean - 3.0 * a[0].mean).abs() < 1e-10 * b[0].mean);
    for (x, y) in a[0].xi.iter().zip(&b[0].xi) {
        assert!((y - 3.0 * x).abs() <= 1e-10 * y.max(1e-300));
    }
    for (p, q) in a[0].density.iter().zip(&b[0].density) {
        assert!((3.0 * q - p).abs() <= 1e-8 * p.abs().max(1.0));
    }
}

#[test]
fn csv_and_json_outputs() {
    let model = DistModel::new(0.1, 0.05, 0.3, 1.0, 3).unwrap();
    let d = cost_distributions(&model, &[1.0], &DistConfig::default())
        .unwrap()
        .remove(0);
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("xi,cdf,density\n"));
    assert_eq!(text.lines().count(), d.xi.len() + 1);
    let j = serde_json::to_value(&d).unwrap();
    assert!(j["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn ks_distance_of_matching_sample_is_small() {
    let model = DistModel::new(0.1, 0.05, 0.3, 1.0, 1).unwrap();
    // a single step has no interpolation to smooth the atoms of the x rule
    let cfg = DistConfig {
        xi_first_step: 1e-6,
        x_nodes: 2000,
        ..DistConfig::default()
    };
    let d = cost_distributions(&model, &[1.0], &cfg).unwrap().remove(0);
    // single step: L = c (x - 1)^2 with x lognormal, sampled by inversion on a fine grid
    let c = gamma(1.0, 1.0, 0.05, 0.3, 0.1).powi(2);
    let (m, s) = ((0.05 - 0.045) * 0.1, 0.3 * 0.1f64.sqrt());
    let n = 20_000;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            let z = inverse_normal(u);
            c * ((m + s * z).exp() - 1.0).powi(2)
        })
        .collect();
    let ks = ks_distance(&d, &samples);
    assert!(ks < 0.01, "ks {ks}");
}

/// Inverse normal CDF by bisection on the complementary error function.
fn inverse_normal(u: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ncdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

use hedgecost::unit_cost::*;
use hedgecost::{OptionKind, OptionSpec};
use std::f64::consts::PI;

const R: f64 = 0.05;
const VOL: f64 = 0.3;

fn gamma(x: f64, k: f64, r: f64, v: f64, tau: f64) -> f64 {
    let sd = v * tau.sqrt();
    let d1 = ((x / k).ln() + (r + 0.5 * v * v) * tau) / sd;
    (-0.5 * d1 * d1).exp() / (2.0 * PI).sqrt() / (x * sd)
}

/// Weight `e^{-3r tau} x gamma(e^{-r tau} x)^2` with time to maturity `tau`.
fn weight(x: f64, k: f64, r: f64, v: f64, tau: f64) -> f64 {
    (-3.0 * r * tau).exp() * x * gamma((-r * tau).exp() * x, k, r, v, tau).powi(2)
}

/// `E ∫_0^{T'} e^{2r(T'-t)} f(t, e^{r(T'-t)} S_t) vol^2 S_t^2 dt` by the trapezoid rule in
/// time and in the normal variable of `S_t`. With `T' = T` this is `E ∫ vol^2 S^3 gamma^2 dt`.
fn direct_oracle(k: f64, maturity: f64, r: f64, v: f64) -> f64 {
    let horizon = maturity - 0.004;
    let nt = (horizon / 1e-4).round() as usize;
    let dt = horizon / nt as f64;
    let nz = 8_000;
    let (za, zb) = (-8.0, 8.0);
    let dz = (zb - za) / nz as f64;
    let mut total = 0.0;
    for i in 0..=nt {
        let t = i as f64 * dt;
        let tau = maturity - t;
        let grow = (r * (horizon - t)).exp();
        let integrand = |x: f64| grow * grow * weight(grow * x, k, r, v, tau) * x * x;
        let e = if i == 0 {
            v * v * integrand(1.0)
        } else {
            let mut s = 0.0;
            for j in 0..=nz {
                let z = za + j as f64 * dz;
                let x = ((r - 0.5 * v * v) * t + v * t.sqrt() * z).exp();
                let w = if j == 0 || j == nz { 0.5 } else { 1.0 };
                s += w * (-0.5 * z * z).exp() * integrand(x);
            }
            v * v * s * dz / (2.0 * PI).sqrt()
        };
        let w = if i == 0 || i == nt { 0.5 } else { 1.0 };
        total += w * e * dt;
    }
    total
}

fn wide_grid(maturity: f64) -> QuadratureGrid {
    QuadratureGrid {
        k_min: 0.2,
        k_max: 4.0,
        ..QuadratureGrid::standard(maturity)
    }
}

#[test]
fn option_price_quadrature_matches_direct_expectation() {
    for &(k, t) in &[(1.0, 0.1), (0.9, 0.5), (1.2, 0.2)] {
        let opt = OptionSpec::call(k, t).unwrap();
        let q = unit_liquidity_cost(&opt, R, VOL, &wide_grid(t)).unwrap().unit_cost;
        let d = direct_oracle(k, t, R, VOL);
        assert!((q - d).abs() < 2e-4, "K={k} T={t}: quadrature {q} direct {d}");
    }
}

#[test]
fn short_maturity_row() {
    let expected = [0.0049, 0.0791, 0.2040, 0.1195, 0.0245];
    for (k, want) in [0.8, 0.9, 1.0, 1.1, 1.2].iter().zip(expected) {
        let opt = OptionSpec::call(*k, 0.1).unwrap();
        let got = unit_liquidity_cost(&opt, R, VOL, &QuadratureGrid::standard(0.1))
            .unwrap()
            .unit_cost;
        assert!((got - want).abs() <= 0.002, "K={k}: {got} vs {want}");
    }
}

#[test]
fn refinement_is_stable() {
    let opt = OptionSpec::call(1.0, 0.2).unwrap();
    let base = QuadratureGrid::standard(0.2);
    let a = unit_liquidity_cost(&opt, R, VOL, &base).unwrap().unit_cost;
    let b = unit_liquidity_cost(&opt, R, VOL, &base.refined(2.0)).unwrap().unit_cost;
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn cost_grows_with_maturity_at_the_money() {
    let i: Vec<f64> = [0.1, 0.2, 0.5]
        .iter()
        .map(|&t| {
            let opt = OptionSpec::call(1.0, t).unwrap();
            unit_liquidity_cost(&opt, R, VOL, &QuadratureGrid::standard(t))
                .unwrap()
                .unit_cost
        })
        .collect();
    assert!(i.windows(2).all(|w| w[1] > w[0]), "{i:?}");
}

#[test]
fn surface_sweep_shapes_and_json() {
    let pts = unit_cost_surface(&[0.3], &[0.1], &[0.9, 1.0], R, OptionKind::Call, 1.0).unwrap();
    assert_eq!(pts.len(), 2);
    assert!((pts[1].result.unit_cost - 0.2040).abs() < 0.002);
    let j = serde_json::to_value(pts[0]).unwrap();
    assert!(j.get("I").is_some() && j.get("moneyness").is_some());
}

#[test]
fn bad_grid_is_rejected() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let g = QuadratureGrid {
        t_max: 0.1,
        ..QuadratureGrid::standard(0.1)
    };
    assert!(unit_liquidity_cost(&opt, R, VOL, &g).unwrap_err().is_config());
}

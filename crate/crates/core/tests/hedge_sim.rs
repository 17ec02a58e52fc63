use hedgecost::hedge_sim::*;
use hedgecost::unit_cost::{unit_liquidity_cost, QuadratureGrid};
use hedgecost::{MarketParams, OptionSpec};

fn market() -> MarketParams {
    MarketParams::new(1.0, 0.05, 0.3).unwrap()
}

#[test]
fn cost_scales_with_slope_and_squared_position() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    for policy in [RebalancePolicy::hourly(), RebalancePolicy::threshold(0.05)] {
        let mut base = SimConfig::unit(policy, 0.1, 300, 17);
        base.keep_path_costs = true;
        let b = estimate_unit_cost_mc(&opt, &market(), &base).unwrap();
        for n in [1.0, 2.0, 5.0] {
            for a in [0.5, 1.0, 2.0] {
                let cfg = SimConfig {
                    n_options: n,
                    alpha_prime: a,
                    ..base
                };
                let r = estimate_unit_cost_mc(&opt, &market(), &cfg).unwrap();
                let k = a * n * n;
                assert!((r.mean - k * b.mean).abs() <= 1e-12 * k * b.mean);
                for (x, y) in r.path_costs.unwrap().iter().zip(b.path_costs.as_ref().unwrap()) {
                    assert!((x - k * y).abs() <= 1e-12 * k * y.abs().max(1e-300));
                }
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let opt = OptionSpec::call(1.1, 0.1).unwrap();
    let cfg = SimConfig {
        keep_path_costs: true,
        ..SimConfig::unit(RebalancePolicy::hourly(), 0.1, 500, 3)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_unit_cost_mc(&opt, &market(), &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn paths_are_prefix_stable() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let small = SimConfig {
        keep_path_costs: true,
        ..SimConfig::unit(RebalancePolicy::hourly(), 0.1, 50, 9)
    };
    let large = SimConfig { n_paths: 120, ..small };
    let a = estimate_unit_cost_mc(&opt, &market(), &small)
        .unwrap()
        .path_costs
        .unwrap();
    let b = estimate_unit_cost_mc(&opt, &market(), &large)
        .unwrap()
        .path_costs
        .unwrap();
    assert_eq!(a[..], b[..50]);
}

#[test]
fn seed_sweep_brackets_the_quadrature() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let target = unit_liquidity_cost(&opt, 0.05, 0.3, &QuadratureGrid::standard(0.1))
        .unwrap()
        .unit_cost;
    let mut covered = 0;
    let mut means = Vec::new();
    for seed in 0..20 {
        let r = estimate_unit_cost_mc(
            &opt,
            &market(),
            &SimConfig::unit(RebalancePolicy::hourly(), 0.1, 2000, 1000 + seed),
        )
        .unwrap();
        if (r.mean - target).abs() <= r.ci99 {
            covered += 1;
        }
        means.push(r.mean);
    }
    assert!(covered >= 18, "{covered}/20 intervals cover {target}: {means:?}");
    let grand = means.iter().sum::<f64>() / 20.0;
    assert!((grand - target).abs() < 0.004, "grand mean {grand} vs {target}");
}

#[test]
fn threshold_policy_tracks_the_quadrature() {
    let opt = OptionSpec::call(1.1, 0.1).unwrap();
    let target = unit_liquidity_cost(&opt, 0.05, 0.3, &QuadratureGrid::standard(0.1))
        .unwrap()
        .unit_cost;
    let r = estimate_unit_cost_mc(
        &opt,
        &market(),
        &SimConfig::unit(RebalancePolicy::threshold(0.05), 0.1, 4000, 5),
    )
    .unwrap();
    assert!(
        (r.mean - target).abs() <= r.ci99 + 0.002,
        "{} ± {} vs {target}",
        r.mean,
        r.ci99
    );
}

#[test]
fn confidence_interval_is_normal_quantile_half_width() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let r = estimate_unit_cost_mc(
        &opt,
        &market(),
        &SimConfig {
            keep_path_costs: true,
            ..SimConfig::unit(RebalancePolicy::hourly(), 0.1, 400, 2)
        },
    )
    .unwrap();
    let c = r.path_costs.as_ref().unwrap();
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((r.mean - mean).abs() < 1e-14);
    assert!((r.sd - var.sqrt()).abs() < 1e-12);
    assert!((r.ci99 - 2.576 * var.sqrt() / n.sqrt()).abs() < 1e-14);
    assert!(c.iter().all(|x| *x >= 0.0));
}

#[test]
fn physical_drift_changes_paths_not_hedge() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let rn = SimConfig::unit(RebalancePolicy::hourly(), 0.1, 300, 4);
    let ph = SimConfig {
        drift: Drift::Physical(0.5),
        ..rn
    };
    let a = estimate_unit_cost_mc(&opt, &market(), &rn).unwrap();
    let b = estimate_unit_cost_mc(&opt, &market(), &ph).unwrap();
    assert_ne!(a.mean, b.mean);
    assert!(b.mean.is_finite() && b.mean > 0.0);
}

#[test]
fn result_serializes_with_policy() {
    let opt = OptionSpec::call(1.0, 0.1).unwrap();
    let r = estimate_unit_cost_mc(
        &opt,
        &market(),
        &SimConfig::unit(RebalancePolicy::threshold(0.05), 0.1, 20, 1),
    )
    .unwrap();
    let j = serde_json::to_value(&r).unwrap();
    assert_eq!(j["policy"]["kind"], "delta_threshold");
    assert!(j.get("path_costs").is_none());
}

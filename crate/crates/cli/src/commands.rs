use anyhow::{bail, Result};
use hedgecost::cost_dist::{cost_distributions, ks_distance, CostDistribution, DistConfig, DistModel};
use hedgecost::hedge_sim::{
    estimate_unit_cost_mc, CostForm, Drift, RebalancePolicy, SimConfig, DEFAULT_MONITOR_DIVISOR,
};
use hedgecost::supply_curve::*;
use hedgecost::unit_cost::{expected_liquidity_cost, unit_liquidity_cost, QuadratureGrid, UnitCostResult};
use hedgecost::{MarketParams, OptionKind, OptionSpec, HOUR};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{opt, Report, Table};

const SWEEP_MATURITIES: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
const SWEEP_STRIKES: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

fn kind(o: &OptionArgs) -> OptionKind {
    if o.put {
        OptionKind::Put
    } else {
        OptionKind::Call
    }
}

fn kind_name(k: OptionKind) -> &'static str {
    match k {
        OptionKind::Call => "call",
        OptionKind::Put => "put",
    }
}

#[derive(Serialize)]
struct UnitCostRow {
    vol: f64,
    maturity: f64,
    moneyness: f64,
    kind: &'static str,
    #[serde(flatten)]
    result: UnitCostResult,
    /// `alpha N^2 S0 I`
    cost: f64,
}

pub fn unitcost(a: &UnitCostArgs) -> Result<Report> {
    let (vols, maturities, strikes) = if a.sweep {
        (
            a.vols.clone().unwrap_or_else(|| vec![a.market.vol]),
            a.maturities.clone().unwrap_or_else(|| SWEEP_MATURITIES.to_vec()),
            a.strikes.clone().unwrap_or_else(|| SWEEP_STRIKES.to_vec()),
        )
    } else {
        (vec![a.market.vol], vec![a.option.maturity], vec![a.option.moneyness])
    };
    // reject bad scaling inputs before any quadrature runs
    expected_liquidity_cost(a.alpha, a.n_options, a.spot, 0.0)?;
    let k = kind(&a.option);

    let mut rows = Vec::new();
    for &vol in &vols {
        for &maturity in &maturities {
            for &m in &strikes {
                let option = OptionSpec::new(m, maturity, k)?;
                let grid = QuadratureGrid {
                    t_max: maturity - a.expiry_cutoff,
                    t_step: a.t_step,
                    k_step: a.k_step,
                    ..QuadratureGrid::for_option(m, maturity, vol)
                };
                let result = unit_liquidity_cost(&option, a.market.rate, vol, &grid)?;
                let cost = expected_liquidity_cost(a.alpha, a.n_options, a.spot, result.unit_cost)?;
                rows.push(UnitCostRow {
                    vol,
                    maturity,
                    moneyness: m,
                    kind: kind_name(k),
                    result,
                    cost,
                });
            }
        }
    }

    let mut table = Table::new(&[
        "vol",
        "maturity",
        "moneyness",
        "kind",
        "I",
        "interior_term",
        "boundary_term",
        "cost",
    ]);
    for r in &rows {
        table.push([
            r.vol.to_string(),
            r.maturity.to_string(),
            r.moneyness.to_string(),
            r.kind.to_string(),
            r.result.unit_cost.to_string(),
            r.result.interior_term.to_string(),
            r.result.boundary_term.to_string(),
            r.cost.to_string(),
        ]);
    }
    Ok(Report {
        json: json!({ "results": rows }),
        table,
    })
}

fn policy(a: &SimulateArgs) -> RebalancePolicy {
    match a.policy {
        PolicyKind::Hourly => RebalancePolicy::hourly(),
        PolicyKind::Fixed => RebalancePolicy::FixedInterval { dt: a.dt },
        PolicyKind::Threshold => RebalancePolicy::DeltaThreshold {
            threshold: a.threshold,
            monitor_dt: a.monitor_dt.unwrap_or(HOUR / DEFAULT_MONITOR_DIVISOR),
        },
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Report> {
    let option = OptionSpec::new(a.option.moneyness, a.option.maturity, kind(&a.option))?;
    let params = MarketParams::new(1.0, a.market.rate, a.market.vol)?;
    let base = SimConfig::unit(policy(a), a.option.maturity, a.paths, a.seed);
    let config = SimConfig {
        stop_time: a.stop_time.unwrap_or(base.stop_time),
        alpha_prime: a.alpha_prime,
        n_options: a.n_options,
        cost_form: match a.cost_form {
            CostFormArg::Exact => CostForm::ExactDelta,
            CostFormArg::Gamma => CostForm::GammaApprox,
        },
        drift: a.drift.map_or(Drift::RiskNeutral, Drift::Physical),
        keep_path_costs: a.keep_paths,
        ..base
    };
    let result = estimate_unit_cost_mc(&option, &params, &config)?;

    let table = match &result.path_costs {
        Some(costs) => {
            let mut t = Table::new(&["path", "cost"]);
            for (i, c) in costs.iter().enumerate() {
                t.push([i.to_string(), c.to_string()]);
            }
            t
        }
        None => {
            let mut t = Table::new(&["mean", "sd", "ci99", "n_paths", "seed"]);
            t.push([
                result.mean.to_string(),
                result.sd.to_string(),
                result.ci99.to_string(),
                result.n_paths.to_string(),
                result.seed.to_string(),
            ]);
            t
        }
    };
    Ok(Report {
        json: json!({ "simulation": config, "result": result }),
        table,
    })
}

/// Empirical CDF at each node and a histogram over the dual cells of the cost grid.
struct Overlay {
    cdf: Vec<f64>,
    density: Vec<f64>,
}

fn overlay(dist: &CostDistribution, samples: &[f64]) -> Overlay {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let below = |x: f64| s.partition_point(|v| *v <= x) as f64 / n;
    let xi = &dist.xi;
    let last = xi.len() - 1;
    let edges: Vec<f64> = (0..=xi.len())
        .map(|j| match j {
            0 => f64::NEG_INFINITY,
            j if j > last => xi[last],
            j => 0.5 * (xi[j - 1] + xi[j]),
        })
        .collect();
    let widths = dist.cell_widths();
    Overlay {
        cdf: xi.iter().map(|&x| below(x)).collect(),
        density: (0..xi.len())
            .map(|j| (below(edges[j + 1]) - below(edges[j])) / widths[j])
            .collect(),
    }
}

pub fn distribution(a: &DistributionArgs) -> Result<Report> {
    let o = &a.option;
    let model = DistModel::new(o.maturity, a.market.rate, a.market.vol, a.alpha_prime, a.steps)?;
    let config = DistConfig {
        x_nodes: a.x_nodes,
        xi_nodes: a.xi_nodes,
        xi_max: a.xi_max,
        xi_max_multiple: a.xi_max_multiple,
        ..DistConfig::default()
    };
    let dist = cost_distributions(&model, &[o.moneyness], &config)?.remove(0);

    let mut mc = None;
    if a.mc_overlay {
        let option = OptionSpec::new(o.moneyness, o.maturity, kind(o))?;
        let params = MarketParams::new(1.0, a.market.rate, a.market.vol)?;
        let sim = SimConfig {
            stop_time: o.maturity,
            alpha_prime: a.alpha_prime,
            cost_form: CostForm::GammaApprox,
            keep_path_costs: true,
            ..SimConfig::unit(
                RebalancePolicy::FixedInterval {
                    dt: o.maturity / a.steps as f64,
                },
                o.maturity,
                a.mc_paths,
                a.seed,
            )
        };
        let r = estimate_unit_cost_mc(&option, &params, &sim)?;
        let costs = r.path_costs.as_deref().unwrap_or_default();
        mc = Some((ks_distance(&dist, costs), overlay(&dist, costs), r));
    }

    let mut header = vec!["xi", "cdf", "density"];
    if mc.is_some() {
        header.extend(["mc_cdf", "mc_density"]);
    }
    let mut table = Table::new(&header);
    for j in 0..dist.xi.len() {
        let mut row = vec![
            dist.xi[j].to_string(),
            dist.cdf[j].to_string(),
            dist.density[j].to_string(),
        ];
        if let Some((_, ov, _)) = &mc {
            row.push(ov.cdf[j].to_string());
            row.push(ov.density[j].to_string());
        }
        table.push(row);
    }

    let mut json = json!({
        "model": model,
        "grid": config,
        "moneyness": dist.moneyness,
        "mean": dist.mean,
        "density_mean": dist.density_mean(),
        "mass": dist.mass,
        "xi": dist.xi,
        "cdf": dist.cdf,
        "density": dist.density,
    });
    if let Some((ks, ov, r)) = mc {
        json["mc_overlay"] = json!({
            "ks_distance": ks,
            "mean": r.mean,
            "sd": r.sd,
            "ci99": r.ci99,
            "n_paths": r.n_paths,
            "seed": r.seed,
            "cdf": ov.cdf,
            "density": ov.density,
        });
    }
    Ok(Report { json, table })
}

fn regime(s: &SlopeArgs) -> Result<SlopeRegime> {
    Ok(match s.regime {
        RegimeArg::Continuous => SlopeRegime::Continuous { levels: s.levels },
        RegimeArg::Discrete => match s.q {
            Some(q) => SlopeRegime::Discrete { q },
            None => bail!("the discrete regime needs --q"),
        },
    })
}

fn fit_table(fit: &SlopeFit) -> Table {
    let mut t = Table::new(&[
        "alpha",
        "regime",
        "alpha_buy",
        "alpha_sell",
        "points",
        "rms_residual",
        "mid",
    ]);
    let regime = match fit.regime {
        SlopeRegime::Continuous { .. } => "continuous",
        SlopeRegime::Discrete { .. } => "discrete",
    };
    let d = &fit.diagnostics;
    t.push([
        fit.alpha.to_string(),
        regime.to_string(),
        opt(d.alpha_buy),
        opt(d.alpha_sell),
        d.points.to_string(),
        d.rms_residual.to_string(),
        d.mid.to_string(),
    ]);
    t
}

fn load_book(b: &BookArgs) -> Result<BookSnapshot> {
    Ok(BookSnapshot::from_csv_path(&b.book, b.tick, b.mid)?)
}

pub fn supply_fit(a: &FitArgs) -> Result<Report> {
    let book = load_book(&a.book)?;
    let fit = fit_alpha(&book, regime(&a.slope)?)?;
    Ok(Report {
        table: fit_table(&fit),
        json: json!({ "fit": fit }),
    })
}

fn repeat_or_list(single: Option<f64>, list: &Option<Vec<f64>>, depth: usize, what: &str) -> Result<Vec<f64>> {
    match (single, list) {
        (Some(v), _) => Ok(vec![v; depth]),
        (None, Some(l)) if l.len() == depth => Ok(l.clone()),
        (None, Some(l)) => bail!("{what} lists {} rates for a depth of {depth} ticks", l.len()),
        (None, None) => bail!("{what} rates are missing"),
    }
}

pub fn supply_stationary(a: &StationaryArgs) -> Result<Report> {
    let depth = match (a.depth, &a.lambda, &a.theta) {
        (Some(d), _, _) => d,
        (None, Some(l), _) => l.len(),
        (None, None, Some(t)) => t.len(),
        (None, None, None) => 1,
    };
    if depth == 0 {
        bail!("depth must be at least one tick");
    }
    let limit = match (a.power_k, a.power_a) {
        (Some(k), Some(p)) => power_law_rates(k, p, depth)?,
        _ => repeat_or_list(a.lambda1, &a.lambda, depth, "limit-order")?,
    };
    let cancel = repeat_or_list(a.theta1, &a.theta, depth, "cancellation")?;
    let rates = OrderFlowRates::new(limit, a.mu, cancel)?;
    let depths = stationary_book(&rates)?;
    let book = book_from_depths(&depths, a.tick, a.mid)?;
    let fit = fit_alpha(&book, regime(&a.slope)?)?;

    let mut table = Table::new(&["tick", "limit", "cancel", "depth"]);
    for (i, d) in depths.iter().enumerate() {
        table.push([
            (i + 1).to_string(),
            rates.limit[i].to_string(),
            rates.cancel[i].to_string(),
            d.to_string(),
        ]);
    }
    Ok(Report {
        json: json!({ "rates": rates, "depths": depths, "book": book, "fit": fit }),
        table,
    })
}

pub fn supply_eval(a: &EvalArgs) -> Result<Report> {
    let book = load_book(&a.book)?;
    let price = supply_from_book(&book, a.z)?;
    let cost = a.z * (price - book.mid);
    let mut table = Table::new(&["z", "price", "mid", "cost"]);
    table.push([a.z, price, book.mid, cost]);
    Ok(Report {
        json: json!({ "z": a.z, "price": price, "mid": book.mid, "cost": cost }),
        table,
    })
}

/// Resolved flags of the command for the JSON echo.
pub fn echo(command: &Command) -> Value {
    let v = match command {
        Command::Unitcost(a) => serde_json::to_value(a),
        Command::Simulate(a) => serde_json::to_value(a),
        Command::Distribution(a) => serde_json::to_value(a),
        Command::Supplycurve(SupplyCommand::Fit(a)) => serde_json::to_value(a),
        Command::Supplycurve(SupplyCommand::Stationary(a)) => serde_json::to_value(a),
        Command::Supplycurve(SupplyCommand::Eval(a)) => serde_json::to_value(a),
    };
    v.unwrap_or(Value::Null)
}

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Unitcost(a) => unitcost(a),
        Command::Simulate(a) => simulate(a),
        Command::Distribution(a) => distribution(a),
        Command::Supplycurve(SupplyCommand::Fit(a)) => supply_fit(a),
        Command::Supplycurve(SupplyCommand::Stationary(a)) => supply_stationary(a),
        Command::Supplycurve(SupplyCommand::Eval(a)) => supply_eval(a),
    }
}

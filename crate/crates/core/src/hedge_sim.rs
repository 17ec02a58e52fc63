//! Monte Carlo delta hedging against a linear supply curve.
//!
//! Each rebalancing trade of `ΔZ` shares at price `S` costs `alpha' S ΔZ^2` on top of
//! the mid price. The initial position at time zero is not charged and the position
//! is not unwound at the stop time.
//!
//! Paths draw from independent ChaCha streams keyed by `(seed, path index)`, so a
//! given path is the same whatever the path count or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::{delta_tau, gamma_tau, MarketParams, OptionSpec};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::unit_cost::EXPIRY_CUTOFF;
use crate::HOUR;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

/// Delta threshold used for the discrete-trading comparison.
pub const DEFAULT_DELTA_THRESHOLD: f64 = 0.05;

/// Threshold monitoring runs on this fraction of the hourly grid.
pub const DEFAULT_MONITOR_DIVISOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RebalancePolicy {
    /// Rebalance to the model delta every `dt` years.
    FixedInterval { dt: f64 },
    /// Rebalance to the model delta whenever it has moved at least `threshold`
    /// (per option) away from the held position, checking every `monitor_dt` years.
    DeltaThreshold { threshold: f64, monitor_dt: f64 },
}

impl RebalancePolicy {
    pub fn hourly() -> Self {
        RebalancePolicy::FixedInterval { dt: HOUR }
    }

    pub fn threshold(threshold: f64) -> Self {
        RebalancePolicy::DeltaThreshold {
            threshold,
            monitor_dt: HOUR / DEFAULT_MONITOR_DIVISOR,
        }
    }

    /// Time step of the simulated path.
    pub fn path_step(&self) -> f64 {
        match *self {
            RebalancePolicy::FixedInterval { dt } => dt,
            RebalancePolicy::DeltaThreshold { monitor_dt, .. } => monitor_dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RebalancePolicy::FixedInterval { dt } => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::config(format!(
                        "rebalancing interval must be positive, got {dt}"
                    )));
                }
            }
            RebalancePolicy::DeltaThreshold { threshold, monitor_dt } => {
                if !(threshold > 0.0 && threshold < 1.0) {
                    return Err(Error::config(format!(
                        "delta threshold must lie in (0, 1), got {threshold}"
                    )));
                }
                if !(monitor_dt.is_finite() && monitor_dt > 0.0) {
                    return Err(Error::config(format!(
                        "monitoring step must be positive, got {monitor_dt}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How the per-trade delta change is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostForm {
    /// Actual difference of model deltas between rebalancing dates.
    #[default]
    ExactDelta,
    /// First-order form `gamma(t_{i-1}) (S_i - S_{i-1})`; fixed-interval only.
    GammaApprox,
}

/// Drift of the simulated underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "measure", content = "drift", rename_all = "snake_case")]
pub enum Drift {
    /// Paths grow at the hedger's rate `r`.
    #[default]
    RiskNeutral,
    /// Paths grow at the given physical drift; deltas still use `r`.
    Physical(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub policy: RebalancePolicy,
    /// Hedging stops here; must precede maturity for exact deltas.
    pub stop_time: f64,
    pub alpha_prime: f64,
    /// Number of options hedged; the position is `n_options` times the unit delta.
    pub n_options: f64,
    pub cost_form: CostForm,
    pub drift: Drift,
    /// Keep every path's cost in the result.
    pub keep_path_costs: bool,
}

impl SimConfig {
    /// Unit-cost setup: `alpha' = 1`, one option, stop one trading day before expiry.
    pub fn unit(policy: RebalancePolicy, maturity: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            policy,
            stop_time: maturity - EXPIRY_CUTOFF,
            alpha_prime: 1.0,
            n_options: 1.0,
            cost_form: CostForm::ExactDelta,
            drift: Drift::RiskNeutral,
            keep_path_costs: false,
        }
    }

    pub fn validate(&self, opt: &OptionSpec) -> Result<()> {
        self.policy.validate()?;
        if self.n_paths == 0 {
            return Err(Error::config("at least one path is required"));
        }
        if !(self.alpha_prime.is_finite() && self.alpha_prime >= 0.0) {
            return Err(Error::domain(format!(
                "alpha' must be nonnegative, got {}",
                self.alpha_prime
            )));
        }
        if !(self.n_options.is_finite() && self.n_options >= 0.0) {
            return Err(Error::domain(format!(
                "option count must be nonnegative, got {}",
                self.n_options
            )));
        }
        if let Drift::Physical(mu) = self.drift {
            if !mu.is_finite() {
                return Err(Error::domain("drift must be finite"));
            }
        }
        check_horizon(&self.policy, self.cost_form, self.stop_time, opt)
    }
}

fn check_horizon(policy: &RebalancePolicy, form: CostForm, stop_time: f64, opt: &OptionSpec) -> Result<()> {
    if !(stop_time.is_finite() && stop_time > 0.0) {
        return Err(Error::config(format!("stop time must be positive, got {stop_time}")));
    }
    match form {
        CostForm::ExactDelta if stop_time >= opt.maturity => Err(Error::config(format!(
            "stop time {stop_time} must precede maturity {} for exact deltas",
            opt.maturity
        ))),
        CostForm::GammaApprox if stop_time > opt.maturity => Err(Error::config(format!(
            "stop time {stop_time} is past maturity {}",
            opt.maturity
        ))),
        CostForm::GammaApprox if matches!(policy, RebalancePolicy::DeltaThreshold { .. }) => Err(Error::config(
            "the gamma-approximation cost applies to fixed-interval rebalancing only",
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean: f64,
    pub sd: f64,
    /// Half-width of the 99% confidence interval of the mean.
    pub ci99: f64,
    pub n_paths: usize,
    pub policy: RebalancePolicy,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path_costs: Option<Vec<f64>>,
}

impl SimResult {
    pub fn from_costs(costs: Vec<f64>, policy: RebalancePolicy, seed: u64, keep: bool) -> Self {
        let n = costs.len();
        let mean = compensated_sum(costs.iter().copied()) / n as f64;
        let sd = if n > 1 {
            (compensated_sum(costs.iter().map(|c| (c - mean) * (c - mean))) / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            sd,
            ci99: Z99 * sd / (n as f64).sqrt(),
            n_paths: n,
            policy,
            seed,
            path_costs: keep.then_some(costs),
        }
    }
}

/// `0, step, 2 step, ...` up to `horizon`, with a shorter final step if needed.
pub fn time_schedule(step: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && horizon > 0.0 && step.is_finite() && horizon.is_finite()) {
        return Err(Error::config(format!(
            "invalid schedule: step {step}, horizon {horizon}"
        )));
    }
    let n = (horizon / step - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    times.push(horizon);
    Ok(times)
}

/// Random stream for one path.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Exact lognormal sampling of `S` on `times` (which must start at 0), with drift
/// `params.rate` and volatility `params.vol`.
pub fn simulate_gbm_path<R: rand::Rng + ?Sized>(params: &MarketParams, times: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if !(params.spot > 0.0 && params.spot.is_finite() && params.rate.is_finite()) {
        return Err(Error::domain("spot must be positive and drift finite"));
    }
    if !(params.vol.is_finite() && params.vol >= 0.0) {
        return Err(Error::domain("volatility must be nonnegative"));
    }
    if times.first() != Some(&0.0) || !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::config("time schedule must start at 0 and increase strictly"));
    }
    let mut prices = Vec::with_capacity(times.len());
    let mut s = params.spot;
    prices.push(s);
    let half_var = 0.5 * params.vol * params.vol;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let z: f64 = StandardNormal.sample(rng);
        s *= ((params.rate - half_var) * dt + params.vol * dt.sqrt() * z).exp();
        prices.push(s);
    }
    Ok(prices)
}

/// Hedging parameters shared by every path.
#[derive(Debug, Clone, Copy)]
pub struct HedgeSpec {
    pub option: OptionSpec,
    pub rate: f64,
    pub vol: f64,
    pub alpha_prime: f64,
    pub n_options: f64,
    pub cost_form: CostForm,
}

/// Liquidity cost of hedging along one path sampled on `times`.
///
/// Fixed-interval: `Σ alpha' S_{i-1} (N ΔD_i)^2`, with `ΔD_i` the exact delta change or
/// its first-order `gamma ΔS` form. Delta threshold: each time the model delta is at
/// least `threshold` away from the held position the whole gap `g` is traded at
/// `alpha' S (N g)^2`. Trading whole multiples of `threshold` instead would lose the
/// monitoring overshoot and bias the cost low. For the fixed policy `times` must be the
/// rebalancing dates.
pub fn path_liquidity_cost(times: &[f64], prices: &[f64], policy: &RebalancePolicy, hedge: &HedgeSpec) -> Result<f64> {
    policy.validate()?;
    let stop = *times.last().ok_or_else(|| Error::config("empty path"))?;
    check_horizon(policy, hedge.cost_form, stop, &hedge.option)?;
    if times.len() != prices.len() {
        return Err(Error::config("times and prices differ in length"));
    }
    Ok(path_cost_unchecked(times, prices, policy, hedge))
}

fn path_cost_unchecked(times: &[f64], prices: &[f64], policy: &RebalancePolicy, hedge: &HedgeSpec) -> f64 {
    let opt = &hedge.option;
    let (r, v) = (hedge.rate, hedge.vol);
    let delta_at = |i: usize| delta_tau(prices[i], opt, r, v, opt.maturity - times[i]);
    let scale = hedge.alpha_prime * hedge.n_options * hedge.n_options;
    match (*policy, hedge.cost_form) {
        (RebalancePolicy::FixedInterval { .. }, CostForm::ExactDelta) => {
            let mut prev = delta_at(0);
            compensated_sum((1..times.len()).map(|i| {
                let d = delta_at(i);
                let step = d - prev;
                prev = d;
                prices[i - 1] * step * step
            })) * scale
        }
        (RebalancePolicy::FixedInterval { .. }, CostForm::GammaApprox) => {
            compensated_sum((1..times.len()).map(|i| {
                let s0 = prices[i - 1];
                let g = gamma_tau(s0, opt.strike, r, v, opt.maturity - times[i - 1]);
                let ds = prices[i] - s0;
                s0 * g * g * ds * ds
            })) * scale
        }
        (RebalancePolicy::DeltaThreshold { threshold, .. }, _) => {
            let mut held = delta_at(0);
            let mut acc = crate::numeric::CompensatedSum::new();
            for (i, &s) in prices.iter().enumerate().skip(1) {
                let d = delta_at(i);
                let gap = d - held;
                if gap.abs() >= threshold {
                    held = d;
                    acc.add(s * gap * gap);
                }
            }
            acc.value() * scale
        }
    }
}

/// Mean liquidity cost over `config.n_paths` simulated hedges of `opt`.
pub fn estimate_unit_cost_mc(opt: &OptionSpec, params: &MarketParams, config: &SimConfig) -> Result<SimResult> {
    params.validate()?;
    opt.validate()?;
    config.validate(opt)?;
    let times = time_schedule(config.policy.path_step(), config.stop_time)?;
    let path_params = match config.drift {
        Drift::RiskNeutral => *params,
        Drift::Physical(mu) => MarketParams { rate: mu, ..*params },
    };
    let hedge = HedgeSpec {
        option: *opt,
        rate: params.rate,
        vol: params.vol,
        alpha_prime: config.alpha_prime,
        n_options: config.n_options,
        cost_form: config.cost_form,
    };
    let costs: Vec<f64> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(config.seed, i);
            let prices = simulate_gbm_path(&path_params, &times, &mut rng)?;
            Ok(path_cost_unchecked(&times, &prices, &config.policy, &hedge))
        })
        .collect::<Result<_>>()?;
    Ok(SimResult::from_costs(
        costs,
        config.policy,
        config.seed,
        config.keep_path_costs,
    ))
}

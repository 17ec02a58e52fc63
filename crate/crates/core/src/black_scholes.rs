//! Black-Scholes prices and Greeks, plus the gamma-squared weight used by the
//! liquidity-cost quadrature.
//!
//! Every function here is a pure function of its arguments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_pdf};

/// Smallest time to maturity at which the gamma-based weights are evaluated.
pub const MIN_TIME_TO_MATURITY: f64 = 1e-6;

/// Lognormal market under the pricing measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    pub rate: f64,
    pub vol: f64,
}

impl MarketParams {
    pub fn new(spot: f64, rate: f64, vol: f64) -> Result<Self> {
        let params = Self { spot, rate, vol };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot.is_finite() && self.rate.is_finite() && self.vol.is_finite()) {
            return Err(Error::domain("market parameters must be finite"));
        }
        if self.spot <= 0.0 {
            return Err(Error::domain(format!("spot must be positive, got {}", self.spot)));
        }
        if self.vol <= 0.0 {
            return Err(Error::domain(format!("volatility must be positive, got {}", self.vol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// European option being hedged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64, kind: OptionKind) -> Result<Self> {
        let opt = Self { strike, maturity, kind };
        opt.validate()?;
        Ok(opt)
    }

    pub fn call(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(strike, maturity, OptionKind::Call)
    }

    /// Option with strike `moneyness * spot`.
    pub fn from_moneyness(moneyness: f64, spot: f64, maturity: f64, kind: OptionKind) -> Result<Self> {
        Self::new(moneyness * spot, maturity, kind)
    }

    pub fn moneyness(&self, spot: f64) -> f64 {
        self.strike / spot
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike.is_finite() && self.strike > 0.0) {
            return Err(Error::domain(format!("strike must be positive, got {}", self.strike)));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::domain(format!(
                "maturity must be positive, got {}",
                self.maturity
            )));
        }
        Ok(())
    }

    /// Same option denominated by `spot`: strike becomes moneyness.
    pub fn normalized(&self, spot: f64) -> Self {
        Self {
            strike: self.strike / spot,
            ..*self
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain("non-finite input"))
    }
}

/// Undiscounted-forward Black-Scholes call and put values with time to expiry `tau`.
fn call_put(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> (f64, f64) {
    let discount = (-rate * tau).exp();
    let total_vol = vol * tau.sqrt();
    if total_vol <= 0.0 {
        let fwd_diff = spot - strike * discount;
        return (fwd_diff.max(0.0), (-fwd_diff).max(0.0));
    }
    let d1 = ((spot / strike).ln() + rate * tau) / total_vol + 0.5 * total_vol;
    let d2 = d1 - total_vol;
    let call = spot * norm_cdf(d1) - strike * discount * norm_cdf(d2);
    let put = strike * discount * norm_cdf(-d2) - spot * norm_cdf(-d1);
    (call, put)
}

/// Value at calendar time `t` of the option, with the underlying at `params.spot`.
pub fn bs_price(params: &MarketParams, opt: &OptionSpec, t: f64) -> Result<f64> {
    check_finite(&[params.spot, params.rate, params.vol, opt.strike, opt.maturity, t])?;
    if params.spot <= 0.0 || opt.strike <= 0.0 || params.vol < 0.0 {
        return Err(Error::domain(
            "spot and strike must be positive, volatility nonnegative",
        ));
    }
    if t < 0.0 || t > opt.maturity {
        return Err(Error::domain(format!("t = {t} outside [0, {}]", opt.maturity)));
    }
    let (call, put) = call_put(params.spot, opt.strike, params.rate, params.vol, opt.maturity - t);
    Ok(match opt.kind {
        OptionKind::Call => call,
        OptionKind::Put => put,
    })
}

/// Option-price kernel: the time-0 price of a maturity-`t` put struck at `k` when
/// `k` is at or below the forward `e^{rt} S_0`, otherwise the matching call.
pub fn phi(params: &MarketParams, t: f64, k: f64) -> Result<f64> {
    check_finite(&[t, k])?;
    if k <= 0.0 {
        return Err(Error::domain(format!("strike must be positive, got {k}")));
    }
    if t < 0.0 {
        return Err(Error::domain(format!("maturity must be nonnegative, got {t}")));
    }
    Ok(phi_unchecked(params, t, k))
}

#[inline]
pub(crate) fn phi_unchecked(params: &MarketParams, t: f64, k: f64) -> f64 {
    let (call, put) = call_put(params.spot, k, params.rate, params.vol, t);
    if k <= (params.rate * t).exp() * params.spot {
        put
    } else {
        call
    }
}

/// Standardized distance `h_t` of the call delta `Phi(h_t)`.
#[inline]
fn h_value(x: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    ((x / strike).ln() + (rate + 0.5 * vol * vol) * tau) / (vol * tau.sqrt())
}

fn check_greek_inputs(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    check_finite(&[t, x, rate, vol, opt.strike, opt.maturity])?;
    if x <= 0.0 {
        return Err(Error::domain(format!("spot must be positive, got {x}")));
    }
    if vol <= 0.0 {
        return Err(Error::domain(format!("volatility must be positive, got {vol}")));
    }
    if t < 0.0 {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    let tau = opt.maturity - t;
    if tau <= 0.0 {
        return Err(Error::domain(format!(
            "t = {t} is at or past maturity {}",
            opt.maturity
        )));
    }
    Ok(tau)
}

fn check_weight_inputs(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_greek_inputs(t, x, opt, rate, vol)?;
    if tau < MIN_TIME_TO_MATURITY {
        return Err(Error::domain(format!(
            "time to maturity {tau} below {MIN_TIME_TO_MATURITY}; truncate the horizon before expiry"
        )));
    }
    Ok(tau)
}

/// Delta at time `t` and spot `x`. Puts use call delta minus one.
pub fn bs_delta(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_greek_inputs(t, x, opt, rate, vol)?;
    Ok(delta_tau(x, opt, rate, vol, tau))
}

#[inline]
pub(crate) fn delta_tau(x: f64, opt: &OptionSpec, rate: f64, vol: f64, tau: f64) -> f64 {
    let call = norm_cdf(h_value(x, opt.strike, rate, vol, tau));
    match opt.kind {
        OptionKind::Call => call,
        OptionKind::Put => call - 1.0,
    }
}

/// Gamma at time `t` and spot `x`; identical for calls and puts.
pub fn bs_gamma(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_greek_inputs(t, x, opt, rate, vol)?;
    Ok(gamma_tau(x, opt.strike, rate, vol, tau))
}

/// Gamma with time to maturity `tau`.
#[inline]
pub(crate) fn gamma_tau(x: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    let sd = vol * tau.sqrt();
    norm_pdf(h_value(x, strike, rate, vol, tau)) / (x * sd)
}

/// Exponent shared by the closed-form weight and its time derivative:
/// `-r tau - ((ln(x/K) + vol^2 tau / 2) / (vol sqrt(tau)))^2`.
#[inline]
fn weight_exponent(log_moneyness: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    let z = (log_moneyness + 0.5 * vol * vol * tau) / (vol * tau.sqrt());
    -rate * tau - z * z
}

/// Quadrature weight `f(t, x) = e^{-3r(T-t)} x gamma(t, e^{-r(T-t)} x)^2`, closed form.
pub fn f_weight(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_weight_inputs(t, x, opt, rate, vol)?;
    Ok(f_weight_tau(x, opt.strike, rate, vol, tau))
}

#[inline]
pub(crate) fn f_weight_tau(x: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    let lm = (x / strike).ln();
    weight_exponent(lm, rate, vol, tau).exp() / (2.0 * PI * x * vol * vol * tau)
}

/// The same weight assembled from [`bs_gamma`] instead of the closed form.
pub fn f_weight_composed(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_weight_inputs(t, x, opt, rate, vol)?;
    let g = bs_gamma(t, (-rate * tau).exp() * x, opt, rate, vol)?;
    Ok((-3.0 * rate * tau).exp() * x * g * g)
}

/// Time derivative of [`f_weight`], closed form.
pub fn df_dt(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_weight_inputs(t, x, opt, rate, vol)?;
    Ok(df_dt_tau(x, opt.strike, rate, vol, tau))
}

#[inline]
pub(crate) fn df_dt_tau(x: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    let lm = (x / strike).ln();
    let v2 = vol * vol;
    let bracket = v2 * (4.0 + 4.0 * rate * tau + v2 * tau) * tau - 4.0 * lm * lm;
    bracket / (8.0 * PI * v2 * v2 * tau * tau * tau * x) * weight_exponent(lm, rate, vol, tau).exp()
}

/// Spot derivative of [`f_weight`]; `x^3 df/dx` controls the size of the neglected
/// third-order jump terms under discrete rebalancing.
pub fn df_dx(t: f64, x: f64, opt: &OptionSpec, rate: f64, vol: f64) -> Result<f64> {
    let tau = check_weight_inputs(t, x, opt, rate, vol)?;
    let f = f_weight_tau(x, opt.strike, rate, vol, tau);
    let sd = vol * tau.sqrt();
    let z = ((x / opt.strike).ln() + 0.5 * vol * vol * tau) / sd;
    Ok(-f / x * (1.0 + 2.0 * z / sd))
}

/// Log-moneyness `ln(x/K)` values where [`df_dt`] changes sign at time to maturity `tau`.
pub fn df_dt_zero_crossings(rate: f64, vol: f64, tau: f64) -> [f64; 2] {
    let v2 = vol * vol;
    let half_width = 0.5 * (v2 * (4.0 + 4.0 * rate * tau + v2 * tau) * tau).sqrt();
    [-half_width, half_width]
}

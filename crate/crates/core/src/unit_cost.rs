//! Unit liquidity cost `I` as a weighted integral of European option prices.
//!
//! For a weight `f(t, x)` and horizon `H`,
//!
//! ```text
//! E[ int_0^H e^{2r(H-t)} f(t, e^{r(H-t)} S_t) d[S]_t ]
//!     = -2 int_0^H int_0^inf e^{r(2H-t)} df/dt(t, e^{r(H-t)} k) phi_t(S_0, k) dk dt
//!       + 2 e^{rH} int_0^inf f(H, k) phi_H(S_0, k) dk
//! ```
//!
//! where `phi_t` is the put price below the forward and the call price above it.
//! With the gamma-squared weight of the hedged option this is the expected liquidity
//! cost of continuous delta hedging per unit spot, slope and position size. The weight
//! is singular at expiry, so the horizon is cut to `T' = T - 0.004`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::{df_dt_tau, f_weight_tau, phi_unchecked, MarketParams, OptionSpec, MIN_TIME_TO_MATURITY};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, TrapezoidAxis};

/// Horizon cut before expiry, one trading day.
pub const EXPIRY_CUTOFF: f64 = 0.004;
pub const DEFAULT_T_STEP: f64 = 1e-4;
pub const DEFAULT_K_STEP: f64 = 1e-3;
pub const DEFAULT_K_MIN: f64 = 0.5;
pub const DEFAULT_K_MAX: f64 = 1.5;
/// Above this total volatility the strike range is widened to six standard deviations.
pub const WIDEN_TOTAL_VOL: f64 = 0.3;

/// Time and strike grid, strikes in moneyness units.
///
/// Strikes inside `[0.5, 1.5]` are spaced uniformly by `k_step`; any part of
/// `[k_min, k_max]` outside that band is covered geometrically with ratio `1 + k_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub t_max: f64,
    pub t_step: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
}

impl QuadratureGrid {
    /// `Δt = 1e-4` on `[0, T - 0.004]`, `Δk = 1e-3` on `[0.5, 1.5]`.
    pub fn standard(maturity: f64) -> Self {
        Self {
            t_max: maturity - EXPIRY_CUTOFF,
            t_step: DEFAULT_T_STEP,
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            k_step: DEFAULT_K_STEP,
        }
    }

    /// Standard grid, widened to `[M e^{-6 σ√T}, M e^{6 σ√T}]` when `σ√T` exceeds
    /// [`WIDEN_TOTAL_VOL`].
    pub fn for_option(moneyness: f64, maturity: f64, vol: f64) -> Self {
        let mut grid = Self::standard(maturity);
        let total_vol = vol * maturity.sqrt();
        if total_vol > WIDEN_TOTAL_VOL {
            grid.k_min = grid.k_min.min(moneyness * (-6.0 * total_vol).exp());
            grid.k_max = grid.k_max.max(moneyness * (6.0 * total_vol).exp());
        }
        grid
    }

    /// Same domain with both steps divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            t_step: self.t_step / factor,
            k_step: self.k_step / factor,
            ..*self
        }
    }

    pub fn validate(&self, maturity: f64) -> Result<()> {
        let all = [self.t_max, self.t_step, self.k_min, self.k_max, self.k_step];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::config("grid values must be finite"));
        }
        if self.t_max >= maturity {
            return Err(Error::config(format!(
                "horizon t_max = {} must be strictly before maturity {maturity}",
                self.t_max
            )));
        }
        if maturity - self.t_max < MIN_TIME_TO_MATURITY {
            return Err(Error::config(format!(
                "horizon t_max = {} is closer than {MIN_TIME_TO_MATURITY} to maturity",
                self.t_max
            )));
        }
        if !(self.t_step > 0.0 && self.t_step < self.t_max) {
            return Err(Error::config(format!(
                "time step {} must lie in (0, t_max = {})",
                self.t_step, self.t_max
            )));
        }
        if !(self.k_min > 0.0 && self.k_min < 1.0 && self.k_max > 1.0) {
            return Err(Error::config(format!(
                "strike range [{}, {}] must satisfy 0 < k_min < 1 < k_max",
                self.k_min, self.k_max
            )));
        }
        if !(self.k_step > 0.0 && self.k_step < self.k_max - self.k_min) {
            return Err(Error::config(format!("strike step {} out of range", self.k_step)));
        }
        Ok(())
    }

    pub fn time_axis(&self) -> TrapezoidAxis {
        let n = (self.t_max / self.t_step - 1e-9).ceil().max(1.0) as usize;
        TrapezoidAxis::uniform(0.0, self.t_max, n)
    }

    pub fn strike_axis(&self) -> TrapezoidAxis {
        let lo = self.k_min.max(DEFAULT_K_MIN);
        let hi = self.k_max.min(DEFAULT_K_MAX);
        let n = ((hi - lo) / self.k_step - 1e-9).ceil().max(1.0) as usize;
        let core = TrapezoidAxis::uniform(lo, hi, n).nodes;

        let ratio = 1.0 + self.k_step;
        let mut below = Vec::new();
        let mut k = lo;
        while k > self.k_min {
            k = (k / ratio).max(self.k_min);
            below.push(k);
        }
        below.reverse();

        let mut nodes = below;
        nodes.extend(core);
        let mut k = hi;
        while k < self.k_max {
            k = (k * ratio).min(self.k_max);
            nodes.push(k);
        }
        TrapezoidAxis::from_nodes(nodes)
    }
}

/// Time-dependent weight entering the option-price representation.
pub trait Weight: Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    fn time_derivative(&self, t: f64, x: f64) -> f64;
}

/// Gamma-squared weight `e^{-3r(T-t)} x gamma(t, e^{-r(T-t)} x)^2` of a Black-Scholes delta hedge.
#[derive(Debug, Clone, Copy)]
pub struct GammaWeight {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    pub vol: f64,
}

impl GammaWeight {
    pub fn new(opt: &OptionSpec, rate: f64, vol: f64) -> Self {
        Self {
            strike: opt.strike,
            maturity: opt.maturity,
            rate,
            vol,
        }
    }
}

impl Weight for GammaWeight {
    #[inline]
    fn value(&self, t: f64, x: f64) -> f64 {
        f_weight_tau(x, self.strike, self.rate, self.vol, self.maturity - t)
    }

    #[inline]
    fn time_derivative(&self, t: f64, x: f64) -> f64 {
        df_dt_tau(x, self.strike, self.rate, self.vol, self.maturity - t)
    }
}

/// Weight that depends on the futures price only.
#[derive(Debug, Clone, Copy)]
pub struct StaticWeight<F>(pub F);

impl<F> Weight for StaticWeight<F>
where
    F: Fn(f64) -> f64 + Sync,
{
    fn value(&self, _t: f64, x: f64) -> f64 {
        (self.0)(x)
    }

    fn time_derivative(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
}

/// Source of the option prices `phi_t(S_0, k)`.
pub trait PriceKernel: Sync {
    fn price(&self, t: f64, k: f64) -> f64;
}

/// Black-Scholes put/call kernel.
#[derive(Debug, Clone, Copy)]
pub struct BlackScholesKernel {
    pub params: MarketParams,
}

impl PriceKernel for BlackScholesKernel {
    #[inline]
    fn price(&self, t: f64, k: f64) -> f64 {
        phi_unchecked(&self.params, t, k)
    }
}

/// The two pieces of the option-price representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedIntegral {
    /// `-2 ∫∫ e^{r(2H-t)} ∂f/∂t φ dk dt`
    pub interior: f64,
    /// `2 e^{rH} ∫ f(H, k) φ_H dk`
    pub boundary: f64,
}

impl WeightedIntegral {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

fn non_finite(what: &str, t: f64, k: f64) -> Error {
    Error::numerical(format!("non-finite {what} integrand"), format!("t = {t}, k = {k}"))
}

/// Expected weighted quadratic variation up to `horizon`, written as option prices
/// and integrated with the trapezoid rule on the given axes.
///
/// Each time slice is independent and computed in parallel; slices are combined in
/// index order with compensated summation, so the result does not depend on the
/// thread count.
pub fn weighted_price_integral<W: Weight, P: PriceKernel>(
    weight: &W,
    kernel: &P,
    horizon: f64,
    rate: f64,
    times: &TrapezoidAxis,
    strikes: &TrapezoidAxis,
) -> Result<WeightedIntegral> {
    let slices: Vec<f64> = times
        .nodes
        .par_iter()
        .map(|&t| {
            let growth = (rate * (horizon - t)).exp();
            let scale = (rate * (2.0 * horizon - t)).exp();
            let terms = strikes.iter().map(|(k, w)| {
                let v = scale * weight.time_derivative(t, growth * k) * kernel.price(t, k);
                w * v
            });
            let slice = compensated_sum(terms);
            if slice.is_finite() {
                Ok(slice)
            } else {
                let bad = strikes
                    .nodes
                    .iter()
                    .copied()
                    .find(|&k| !(weight.time_derivative(t, growth * k) * kernel.price(t, k)).is_finite())
                    .unwrap_or(f64::NAN);
                Err(non_finite("interior", t, bad))
            }
        })
        .collect::<Result<_>>()?;
    let interior = -2.0 * compensated_sum(slices.iter().zip(&times.weights).map(|(s, w)| s * w));

    let boundary_sum = compensated_sum(
        strikes
            .iter()
            .map(|(k, w)| w * weight.value(horizon, k) * kernel.price(horizon, k)),
    );
    if !boundary_sum.is_finite() {
        return Err(non_finite("boundary", horizon, f64::NAN));
    }
    let boundary = 2.0 * (rate * horizon).exp() * boundary_sum;
    if !interior.is_finite() {
        return Err(non_finite("interior", f64::NAN, f64::NAN));
    }
    Ok(WeightedIntegral { interior, boundary })
}

/// Unit liquidity cost with its two quadrature components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCostResult {
    #[serde(rename = "I")]
    pub unit_cost: f64,
    pub interior_term: f64,
    pub boundary_term: f64,
    pub grid: QuadratureGrid,
}

/// Unit liquidity cost `I` of delta hedging `opt`, whose `strike` is read as
/// moneyness `K / S_0` (spot normalized to one).
///
/// The horizon `grid.t_max` plays the role of `T'` throughout: the integration runs
/// over `[0, T']` with growth factors `e^{r(T'-t)}`, while the weight keeps the
/// option's own maturity `T`.
pub fn unit_liquidity_cost(opt: &OptionSpec, rate: f64, vol: f64, grid: &QuadratureGrid) -> Result<UnitCostResult> {
    let params = MarketParams::new(1.0, rate, vol)?;
    unit_liquidity_cost_with(opt, rate, vol, grid, &BlackScholesKernel { params })
}

/// [`unit_liquidity_cost`] with a caller-supplied option-price kernel (spot one).
pub fn unit_liquidity_cost_with<P: PriceKernel>(
    opt: &OptionSpec,
    rate: f64,
    vol: f64,
    grid: &QuadratureGrid,
    kernel: &P,
) -> Result<UnitCostResult> {
    opt.validate()?;
    if !(vol.is_finite() && vol > 0.0) {
        return Err(Error::domain(format!("volatility must be positive, got {vol}")));
    }
    if !rate.is_finite() {
        return Err(Error::domain("rate must be finite"));
    }
    grid.validate(opt.maturity)?;
    let weight = GammaWeight::new(opt, rate, vol);
    let parts = weighted_price_integral(
        &weight,
        kernel,
        grid.t_max,
        rate,
        &grid.time_axis(),
        &grid.strike_axis(),
    )?;
    Ok(UnitCostResult {
        unit_cost: parts.total(),
        interior_term: parts.interior,
        boundary_term: parts.boundary,
        grid: *grid,
    })
}

/// Expected liquidity cost `alpha N^2 S_0 I` of hedging `n_options` options.
pub fn expected_liquidity_cost(alpha: f64, n_options: f64, spot: f64, unit_cost: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain(format!(
            "supply-curve slope must be nonnegative, got {alpha}"
        )));
    }
    if !(n_options.is_finite() && n_options >= 0.0) {
        return Err(Error::domain(format!(
            "option count must be nonnegative, got {n_options}"
        )));
    }
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::domain(format!("spot must be positive, got {spot}")));
    }
    Ok(alpha * n_options * n_options * spot * unit_cost)
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub vol: f64,
    pub maturity: f64,
    pub moneyness: f64,
    #[serde(flatten)]
    pub result: UnitCostResult,
}

/// Unit cost over the cartesian product of volatilities, maturities and moneyness
/// values, each on [`QuadratureGrid::for_option`] refined by `refine`.
pub fn unit_cost_surface(
    vols: &[f64],
    maturities: &[f64],
    moneyness: &[f64],
    rate: f64,
    kind: crate::OptionKind,
    refine: f64,
) -> Result<Vec<SurfacePoint>> {
    let mut out = Vec::with_capacity(vols.len() * maturities.len() * moneyness.len());
    for &vol in vols {
        for &maturity in maturities {
            for &m in moneyness {
                let opt = OptionSpec::new(m, maturity, kind)?;
                let grid = QuadratureGrid::for_option(m, maturity, vol).refined(refine);
                let result = unit_liquidity_cost(&opt, rate, vol, &grid)?;
                out.push(SurfacePoint {
                    vol,
                    maturity,
                    moneyness: m,
                    result,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::OptionKind;

    #[test]
    fn standard_grid_axes() {
        let grid = QuadratureGrid::standard(0.1);
        grid.validate(0.1).unwrap();
        let t = grid.time_axis();
        assert_eq!(t.len(), 961);
        assert!((t.nodes[960] - 0.096).abs() < 1e-15);
        let k = grid.strike_axis();
        assert_eq!(k.len(), 1001);
        assert!((k.nodes[0] - 0.5).abs() < 1e-15 && (k.nodes[1000] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn widened_axis_is_geometric_outside_core() {
        let grid = QuadratureGrid::for_option(1.0, 1.0, 0.8);
        assert!(grid.k_min < 0.01 && grid.k_max > 100.0);
        let k = grid.strike_axis();
        assert_eq!(k.nodes[0], grid.k_min);
        assert_eq!(*k.nodes.last().unwrap(), grid.k_max);
        assert!(k.nodes.windows(2).all(|p| p[1] > p[0]));
        let i = k.nodes.iter().position(|&x| x > 2.0).unwrap();
        let ratio = k.nodes[i + 1] / k.nodes[i];
        assert!((ratio - 1.001).abs() < 1e-12);
        // moderate total volatility keeps the plain grid
        assert_eq!(QuadratureGrid::for_option(1.2, 1.0, 0.3), QuadratureGrid::standard(1.0));
    }

    #[test]
    fn grid_validation() {
        let mut grid = QuadratureGrid::standard(0.1);
        grid.t_max = 0.1;
        assert!(matches!(grid.validate(0.1), Err(Error::Config(_))));
        let mut grid = QuadratureGrid::standard(0.1);
        grid.k_min = 1.0;
        assert!(grid.validate(0.1).is_err());
        let mut grid = QuadratureGrid::standard(0.1);
        grid.t_step = 0.2;
        assert!(grid.validate(0.1).is_err());
        let opt = OptionSpec::call(1.0, 0.1).unwrap();
        assert!(matches!(
            unit_liquidity_cost(&opt, 0.05, 0.0, &QuadratureGrid::standard(0.1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_weight_gives_zero() {
        let params = MarketParams::new(1.0, 0.05, 0.3).unwrap();
        let grid = QuadratureGrid::standard(0.5);
        let zero = StaticWeight(|_x: f64| 0.0);
        let v = weighted_price_integral(
            &zero,
            &BlackScholesKernel { params },
            0.5,
            0.05,
            &grid.time_axis(),
            &grid.strike_axis(),
        )
        .unwrap();
        assert_eq!(v.total(), 0.0);
    }

    #[test]
    fn constant_weight_matches_gbm_quadratic_variation() {
        // E[[F]_T] = F_0^2 (e^{σ²T} - 1) for the futures price F_t = e^{r(T-t)} S_t.
        let (rate, vol, maturity) = (0.05, 0.3, 0.5);
        let params = MarketParams::new(1.0, rate, vol).unwrap();
        let fwd = (rate * maturity).exp();
        let sd = vol * maturity.sqrt();
        let n = 4000;
        let nodes: Vec<f64> = (0..=n)
            .map(|i| fwd * (-12.0 * sd + 24.0 * sd * i as f64 / n as f64).exp())
            .collect();
        let strikes = TrapezoidAxis::from_nodes(nodes);
        let times = TrapezoidAxis::uniform(0.0, maturity, 1);
        let v = weighted_price_integral(
            &StaticWeight(|_x: f64| 1.0),
            &BlackScholesKernel { params },
            maturity,
            rate,
            &times,
            &strikes,
        )
        .unwrap();
        let exact = fwd * fwd * ((vol * vol * maturity).exp() - 1.0);
        assert_eq!(v.interior, 0.0);
        assert!((v.total() / exact - 1.0).abs() < 1e-4, "{} vs {exact}", v.total());
    }

    #[test]
    fn vanishing_vol_far_from_money_costs_nothing() {
        let opt = OptionSpec::call(1.4, 0.2).unwrap();
        let i = unit_liquidity_cost(&opt, 0.05, 0.01, &QuadratureGrid::standard(0.2)).unwrap();
        assert!(i.unit_cost.abs() < 1e-10, "{i:?}");
    }

    #[test]
    fn put_and_call_costs_agree() {
        let grid = QuadratureGrid {
            t_step: 1e-3,
            k_step: 5e-3,
            ..QuadratureGrid::standard(0.2)
        };
        let call = OptionSpec::new(0.95, 0.2, OptionKind::Call).unwrap();
        let put = OptionSpec::new(0.95, 0.2, OptionKind::Put).unwrap();
        let a = unit_liquidity_cost(&call, 0.05, 0.3, &grid).unwrap().unit_cost;
        let b = unit_liquidity_cost(&put, 0.05, 0.3, &grid).unwrap().unit_cost;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn expected_cost_scaling() {
        assert_eq!(expected_liquidity_cost(0.0, 10.0, 30.0, 0.2).unwrap(), 0.0);
        let base = expected_liquidity_cost(1.0, 1.0, 1.0, 0.2040).unwrap();
        assert_eq!(base, 0.2040);
        let c = expected_liquidity_cost(1e-6, 3.0, 2.0, 0.2).unwrap();
        assert!((expected_liquidity_cost(1e-6, 6.0, 2.0, 0.2).unwrap() / (4.0 * c) - 1.0).abs() < 1e-15);
        assert_eq!(expected_liquidity_cost(1e-6, 3.0, 4.0, 0.2).unwrap(), 2.0 * c);
        assert!(expected_liquidity_cost(-1.0, 1.0, 1.0, 0.2).is_err());
    }
}

//! Distribution of the discretely hedged liquidity cost.
//!
//! With `N` equal steps of length `δ`, the cost of one path is
//! `L = Σ alpha' S_{i-1} gamma_i(S_{i-1})^2 (S_i - S_{i-1})^2`, where `gamma_i` is the
//! option gamma at time-to-maturity `(N - i + 1) δ`. The call-style expectation
//! `G_m(K, ξ) = E[(L_m - ξ)^+]` of the cost `L_m` of the last `m` steps, started from a
//! unit price with strike moneyness `K`, satisfies
//!
//! `G_m(K, ξ) = E[x G_{m-1}(K / x, (ξ - ℓ_m(x)) / x)]`, `G_0(K, ξ) = (-ξ)^+`,
//!
//! where `x` is the one-step price ratio and `ℓ_m(x) = alpha' gamma_m(1)^2 (x - 1)^2`.
//! Differentiating `G_N` in `ξ` gives the CDF (`1 + ∂G/∂ξ`) and differentiating twice
//! gives the density.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::black_scholes::gamma_tau;
use crate::error::{Error, Result};
use crate::hedge_sim::Drift;
use crate::numeric::{gauss_legendre, norm_pdf, CompensatedSum, TrapezoidAxis};

/// Problem definition: what is being hedged and how often.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistModel {
    pub maturity: f64,
    pub rate: f64,
    pub vol: f64,
    pub alpha_prime: f64,
    pub n_steps: usize,
    /// Measure of the one-step transition; gammas always use `rate`.
    #[serde(default)]
    pub drift: Drift,
}

impl DistModel {
    pub fn new(maturity: f64, rate: f64, vol: f64, alpha_prime: f64, n_steps: usize) -> Result<Self> {
        let m = Self {
            maturity,
            rate,
            vol,
            alpha_prime,
            n_steps,
            drift: Drift::RiskNeutral,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::domain(format!(
                "maturity must be positive, got {}",
                self.maturity
            )));
        }
        if !(self.vol.is_finite() && self.vol > 0.0) {
            return Err(Error::domain(format!("volatility must be positive, got {}", self.vol)));
        }
        if !self.rate.is_finite() {
            return Err(Error::domain("rate must be finite"));
        }
        if !(self.alpha_prime.is_finite() && self.alpha_prime >= 0.0) {
            return Err(Error::domain(format!(
                "alpha' must be nonnegative, got {}",
                self.alpha_prime
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::config("at least one hedging step is required"));
        }
        if let Drift::Physical(mu) = self.drift {
            if !mu.is_finite() {
                return Err(Error::domain("drift must be finite"));
            }
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.maturity / self.n_steps as f64
    }

    fn growth(&self) -> f64 {
        match self.drift {
            Drift::RiskNeutral => self.rate,
            Drift::Physical(mu) => mu,
        }
    }

    /// Mean and standard deviation of the one-step log price ratio.
    fn log_step(&self) -> (f64, f64) {
        let d = self.step();
        ((self.growth() - 0.5 * self.vol * self.vol) * d, self.vol * d.sqrt())
    }
}

/// Grid resolution controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistConfig {
    /// Gauss-Legendre nodes for the one-step expectation.
    pub x_nodes: usize,
    /// Half-width of the one-step domain in standard deviations.
    pub x_span: f64,
    pub xi_nodes: usize,
    /// Largest cost node; derived from the mean cost when absent.
    pub xi_max: Option<f64>,
    pub xi_max_multiple: f64,
    /// First cost increment as a fraction of `xi_max`.
    pub xi_first_step: f64,
    /// Log-moneyness spacing at level `m`, in units of `vol sqrt(m δ)`.
    pub moneyness_step: f64,
    /// Finely resolved moneyness band at level `m`, in units of `vol sqrt((N - m) δ)`.
    pub core_span: f64,
    /// Spacing growth factor in the moneyness tails.
    pub tail_growth: f64,
}

impl Default for DistConfig {
    fn default() -> Self {
        Self {
            x_nodes: 200,
            x_span: 6.0,
            xi_nodes: 200,
            xi_max: None,
            xi_max_multiple: 20.0,
            xi_first_step: 1e-4,
            moneyness_step: 0.1,
            core_span: 6.0,
            tail_growth: 1.2,
        }
    }
}

impl DistConfig {
    pub fn validate(&self) -> Result<()> {
        if self.x_nodes < 2 || self.xi_nodes < 3 {
            return Err(Error::config("dist grid needs at least 2 x nodes and 3 cost nodes"));
        }
        let positive = [
            self.x_span,
            self.xi_max_multiple,
            self.xi_first_step,
            self.moneyness_step,
            self.core_span,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("dist grid spans and steps must be positive"));
        }
        if !(self.tail_growth >= 1.0 && self.tail_growth.is_finite()) {
            return Err(Error::config("tail growth must be at least 1"));
        }
        if self.xi_first_step >= 1.0 {
            return Err(Error::config("first cost step must be below xi_max"));
        }
        if let Some(x) = self.xi_max {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::config(format!("xi_max must be positive, got {x}")));
            }
        }
        Ok(())
    }
}

/// One-step quadrature node for the price ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioNode {
    pub ratio: f64,
    pub log_ratio: f64,
    pub weight: f64,
}

/// All axes used by the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct DistGrid {
    /// Log-moneyness axis of level `m` at index `m - 1`; the last holds the targets.
    pub levels: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub ratios: Vec<RatioNode>,
    pub step: f64,
}

impl DistGrid {
    /// Axes for the given target moneyness values. Every level's axis covers all
    /// queries the level above can make.
    pub fn build(model: &DistModel, targets: &[f64], config: &DistConfig, xi_max: f64) -> Result<Self> {
        model.validate()?;
        config.validate()?;
        if targets.is_empty() || targets.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::domain("target moneyness values must be positive"));
        }
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::config(format!("xi_max must be positive, got {xi_max}")));
        }
        let ratios = ratio_nodes(model, config)?;
        let (lo_step, hi_step) = (ratios[0].log_ratio, ratios[ratios.len() - 1].log_ratio);

        let mut top: Vec<f64> = targets.iter().map(|k| k.ln()).collect();
        top.sort_by(f64::total_cmp);
        top.dedup();

        let n = model.n_steps;
        let sd = model.vol * model.step().sqrt();
        let drift_per_step = model.log_step().0.abs();
        let (t_lo, t_hi) = (top[0], top[top.len() - 1]);
        let mut levels = vec![Vec::new(); n];
        levels[n - 1] = top;
        // Queries into level m - 1 are u - ln x for u on level m.
        let (mut need_lo, mut need_hi) = (t_lo, t_hi);
        for m in (1..n).rev() {
            need_lo -= hi_step;
            need_hi -= lo_step;
            let h = config.moneyness_step * sd * (m as f64).sqrt();
            let elapsed = (n - m) as f64;
            let band = config.core_span * sd * elapsed.sqrt() + drift_per_step * elapsed + 2.0 * h;
            let core_lo = (t_lo - band).max(need_lo);
            let core_hi = (t_hi + band).min(need_hi);
            levels[m - 1] = moneyness_axis(core_lo, core_hi, need_lo, need_hi, h, config.tail_growth);
        }
        Ok(Self {
            levels,
            xi: xi_axis(xi_max, config.xi_nodes, config.xi_first_step)?,
            ratios,
            step: model.step(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.levels.len()
    }

    /// Total number of moneyness nodes over all levels.
    pub fn moneyness_nodes(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

fn ratio_nodes(model: &DistModel, config: &DistConfig) -> Result<Vec<RatioNode>> {
    let (mean, sd) = model.log_step();
    let nodes: Vec<RatioNode> = gauss_legendre(config.x_nodes, -config.x_span, config.x_span)
        .into_iter()
        .map(|(z, w)| {
            let log_ratio = mean + sd * z;
            RatioNode {
                ratio: log_ratio.exp(),
                log_ratio,
                weight: w * norm_pdf(z),
            }
        })
        .collect();
    let mass = crate::numeric::compensated_sum(nodes.iter().map(|n| n.weight));
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::numerical(
            format!("one-step quadrature mass {mass} is not 1"),
            format!("x_span {}, {} nodes", config.x_span, config.x_nodes),
        ));
    }
    Ok(nodes)
}

fn moneyness_axis(core_lo: f64, core_hi: f64, need_lo: f64, need_hi: f64, h: f64, growth: f64) -> Vec<f64> {
    let n_core = ((core_hi - core_lo) / h).ceil().max(1.0) as usize;
    let hc = (core_hi - core_lo) / n_core as f64;
    let mut left = Vec::new();
    let (mut u, mut step) = (core_lo, hc);
    while u > need_lo {
        step *= growth;
        u -= step;
        left.push(u.max(need_lo));
    }
    let mut axis: Vec<f64> = left.into_iter().rev().collect();
    axis.extend((0..=n_core).map(|i| core_lo + i as f64 * hc));
    let (mut u, mut step) = (core_hi, hc);
    while u < need_hi {
        step *= growth;
        u += step;
        axis.push(u.min(need_hi));
    }
    axis.dedup();
    axis
}

/// `0` followed by increments growing geometrically from `first * xi_max` to reach
/// `xi_max` in `n - 1` steps.
fn xi_axis(xi_max: f64, n: usize, first: f64) -> Result<Vec<f64>> {
    let steps = (n - 1) as f64;
    let target = 1.0 / first;
    if target <= steps {
        return Ok((0..n).map(|i| xi_max * i as f64 / steps).collect());
    }
    // Solve (q^steps - 1) / (q - 1) = target for q > 1.
    let total = |q: f64| (q.powf(steps) - 1.0) / (q - 1.0);
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    while total(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let mut axis = Vec::with_capacity(n);
    let (mut x, mut inc) = (0.0, first * xi_max);
    axis.push(0.0);
    for _ in 1..n {
        x += inc;
        inc *= q;
        axis.push(x);
    }
    axis[n - 1] = xi_max;
    if !axis.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::config("cost axis is not strictly increasing"));
    }
    Ok(axis)
}

/// Values of `G_m` on a (log-moneyness × cost) grid, stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSurface {
    /// Steps remaining.
    pub level: usize,
    pub log_moneyness: Vec<f64>,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
}

impl GSurface {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.xi.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Row index of a moneyness node, if present.
    pub fn find(&self, moneyness: f64) -> Option<usize> {
        let u = moneyness.ln();
        self.log_moneyness.iter().position(|v| (v - u).abs() < 1e-12)
    }

    /// Interpolated value at an arbitrary point inside the moneyness range.
    pub fn value(&self, moneyness: f64, xi: f64) -> Result<f64> {
        let mut row = vec![0.0; self.xi.len()];
        self.blend_row(moneyness.ln(), &mut row)?;
        Ok(xi_interp(&self.xi, &row, xi))
    }

    /// Row at log-moneyness `u`: four-point Lagrange interpolation across rows,
    /// falling back to linear on axes shorter than four nodes. Floored at zero.
    fn blend_row(&self, u: f64, out: &mut [f64]) -> Result<()> {
        let axis = &self.log_moneyness;
        let n = axis.len();
        let (lo, hi) = (axis[0], axis[n - 1]);
        if !(u >= lo - 1e-12 && u <= hi + 1e-12) {
            return Err(Error::Extrapolation {
                moneyness: u.exp(),
                lo: lo.exp(),
                hi: hi.exp(),
                level: self.level,
            });
        }
        if n == 1 {
            out.copy_from_slice(self.row(0));
            return Ok(());
        }
        let j = axis.partition_point(|&v| v <= u).clamp(1, n - 1) - 1;
        if n < 4 {
            let w = ((u - axis[j]) / (axis[j + 1] - axis[j])).clamp(0.0, 1.0);
            for ((o, a), b) in out.iter_mut().zip(self.row(j)).zip(self.row(j + 1)) {
                *o = a + w * (b - a);
            }
            return Ok(());
        }
        let start = j.saturating_sub(1).min(n - 4);
        let nodes = &axis[start..start + 4];
        let mut w = [1.0; 4];
        for (i, wi) in w.iter_mut().enumerate() {
            for (k, &xk) in nodes.iter().enumerate() {
                if k != i {
                    *wi *= (u - xk) / (nodes[i] - xk);
                }
            }
        }
        let rows = [
            self.row(start),
            self.row(start + 1),
            self.row(start + 2),
            self.row(start + 3),
        ];
        for (c, o) in out.iter_mut().enumerate() {
            let v = w[0] * rows[0][c] + w[1] * rows[1][c] + w[2] * rows[2][c] + w[3] * rows[3][c];
            *o = v.max(0.0);
        }
        Ok(())
    }
}

/// Piecewise-linear `G(ξ)` with the exact branch `G(0) - ξ` below zero and the last
/// slope, floored at zero, beyond the axis.
fn xi_interp(axis: &[f64], row: &[f64], q: f64) -> f64 {
    let n = axis.len();
    if q <= 0.0 {
        return row[0] - q;
    }
    if q >= axis[n - 1] {
        let slope = (row[n - 1] - row[n - 2]) / (axis[n - 1] - axis[n - 2]);
        return (row[n - 1] + slope * (q - axis[n - 1])).max(0.0);
    }
    let j = axis.partition_point(|&v| v <= q) - 1;
    interp_at(axis, row, j, q)
}

#[inline]
fn interp_at(axis: &[f64], row: &[f64], j: usize, q: f64) -> f64 {
    let w = (q - axis[j]) / (axis[j + 1] - axis[j]);
    row[j] + w * (row[j + 1] - row[j])
}

/// Cost of one hedging step from `x_prev` to `x_next` with `steps_remaining` steps
/// of the model left before expiry.
pub fn step_cost(x_prev: f64, x_next: f64, steps_remaining: usize, strike: f64, model: &DistModel) -> Result<f64> {
    if !(x_prev > 0.0 && x_next > 0.0 && strike > 0.0) {
        return Err(Error::domain("prices and strike must be positive"));
    }
    if steps_remaining == 0 || steps_remaining > model.n_steps {
        return Err(Error::domain(format!(
            "steps remaining must lie in 1..={}, got {steps_remaining}",
            model.n_steps
        )));
    }
    let tau = steps_remaining as f64 * model.step();
    let g = gamma_tau(x_prev, strike, model.rate, model.vol, tau);
    let dx = x_next - x_prev;
    Ok(model.alpha_prime * x_prev * g * g * dx * dx)
}

#[inline]
fn unit_step_coefficient(u: f64, steps_remaining: usize, model: &DistModel) -> f64 {
    let g = gamma_tau(
        1.0,
        u.exp(),
        model.rate,
        model.vol,
        steps_remaining as f64 * model.step(),
    );
    model.alpha_prime * g * g
}

/// `G_1(K, ξ)`: expected clipped cost of the final step.
pub fn terminal_g1(moneyness: f64, xi: f64, model: &DistModel, ratios: &[RatioNode]) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::domain(format!("cost level must be nonnegative, got {xi}")));
    }
    if !(moneyness > 0.0) {
        return Err(Error::domain("moneyness must be positive"));
    }
    let c = unit_step_coefficient(moneyness.ln(), 1, model);
    Ok(crate::numeric::compensated_sum(ratios.iter().map(|n| {
        let d = n.ratio - 1.0;
        n.weight * (c * d * d - xi).max(0.0)
    })))
}

fn terminal_surface(model: &DistModel, grid: &DistGrid) -> GSurface {
    let axis = &grid.levels[0];
    let values: Vec<f64> = axis
        .par_iter()
        .flat_map_iter(|&u| {
            let c = unit_step_coefficient(u, 1, model);
            let costs: Vec<(f64, f64)> = grid
                .ratios
                .iter()
                .map(|n| (c * (n.ratio - 1.0).powi(2), n.weight))
                .collect();
            grid.xi
                .iter()
                .map(move |&xi| {
                    let mut acc = CompensatedSum::new();
                    for &(l, w) in &costs {
                        if l > xi {
                            acc.add(w * (l - xi));
                        }
                    }
                    acc.value()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    GSurface {
        level: 1,
        log_moneyness: axis.clone(),
        xi: grid.xi.clone(),
        values,
    }
}

/// `G_m` from `G_{m-1}` on the level-`m` axis of `grid`.
pub fn recurse_level(next: &GSurface, level: usize, model: &DistModel, grid: &DistGrid) -> Result<GSurface> {
    if level < 2 || level > grid.n_steps() || next.level + 1 != level {
        return Err(Error::config(format!(
            "cannot build level {level} from level {} with {} steps",
            next.level,
            grid.n_steps()
        )));
    }
    let axis = &grid.levels[level - 1];
    let xi = &grid.xi;
    let nxi = xi.len();
    let rows: Vec<Vec<f64>> = axis
        .par_iter()
        .map(|&u| {
            let c = unit_step_coefficient(u, level, model);
            let mut acc = vec![0.0; nxi];
            let mut blended = vec![0.0; next.xi.len()];
            for node in &grid.ratios {
                next.blend_row(u - node.log_ratio, &mut blended)?;
                let x = node.ratio;
                let l = c * (x - 1.0).powi(2);
                let inv_x = 1.0 / x;
                let wx = node.weight * x;
                let mut j = 0;
                for (a, &target) in acc.iter_mut().zip(xi) {
                    let q = (target - l) * inv_x;
                    let v = if q <= 0.0 || q >= next.xi[next.xi.len() - 1] {
                        xi_interp(&next.xi, &blended, q)
                    } else {
                        while next.xi[j + 1] <= q {
                            j += 1;
                        }
                        interp_at(&next.xi, &blended, j, q)
                    };
                    *a += wx * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let values = rows.into_iter().flatten().collect::<Vec<_>>();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(
            "non-finite value in recursion",
            format!("level {level}, node {}", bad / nxi),
        ));
    }
    Ok(GSurface {
        level,
        log_moneyness: axis.clone(),
        xi: xi.clone(),
        values,
    })
}

/// Runs the full recursion and returns `G_N` on the target moneyness values.
pub fn final_surface(model: &DistModel, grid: &DistGrid) -> Result<GSurface> {
    let mut g = terminal_surface(model, grid);
    for level in 2..=grid.n_steps() {
        g = recurse_level(&g, level, model, grid)?;
    }
    Ok(g)
}

/// Exact expected cost `E[L]` from a unit price, by one-dimensional quadrature per step.
pub fn expected_discrete_cost(moneyness: f64, model: &DistModel) -> Result<f64> {
    model.validate()?;
    if !(moneyness > 0.0) {
        return Err(Error::domain("moneyness must be positive"));
    }
    let d = model.step();
    let mu = model.growth();
    let sq = ((2.0 * mu + model.vol * model.vol) * d).exp() - 2.0 * (mu * d).exp() + 1.0;
    let z = TrapezoidAxis::uniform(-9.0, 9.0, 6000);
    let n = model.n_steps;
    let mut total = CompensatedSum::new();
    for i in 1..=n {
        let t = (i - 1) as f64 * d;
        let tau = (n - i + 1) as f64 * d;
        let term = if i == 1 {
            let g = gamma_tau(1.0, moneyness, model.rate, model.vol, tau);
            g * g
        } else {
            let (m, s) = ((mu - 0.5 * model.vol * model.vol) * t, model.vol * t.sqrt());
            crate::numeric::compensated_sum(z.iter().map(|(zz, w)| {
                let x = (m + s * zz).exp();
                let g = gamma_tau(x, moneyness, model.rate, model.vol, tau);
                w * norm_pdf(zz) * x * x * x * g * g
            }))
        };
        total.add(term);
    }
    Ok(model.alpha_prime * sq * total.value())
}

/// Cost distribution at one moneyness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    pub moneyness: f64,
    pub xi: Vec<f64>,
    /// `P(L <= ξ)` just above each node.
    pub cdf: Vec<f64>,
    pub density: Vec<f64>,
    /// `G_N(K, 0) = E[L]`.
    pub mean: f64,
    /// Density mass before clipping and renormalization.
    pub mass: f64,
}

impl CostDistribution {
    /// Dual-cell widths matching `density`.
    pub fn cell_widths(&self) -> Vec<f64> {
        cell_widths(&self.xi)
    }

    /// First moment of the extracted density.
    pub fn density_mean(&self) -> f64 {
        crate::numeric::compensated_sum(
            self.xi
                .iter()
                .zip(&self.density)
                .zip(self.cell_widths())
                .map(|((x, p), w)| x * p * w),
        )
    }

    /// CDF at any cost level, interpolating between cell midpoints.
    pub fn cdf_at(&self, xi: f64) -> f64 {
        cdf_between_midpoints(&self.midpoints(), &self.cdf, xi)
    }

    fn midpoints(&self) -> Vec<f64> {
        self.xi.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::numerical(e.to_string(), "csv output");
        w.write_record(["xi", "cdf", "density"]).map_err(io)?;
        for ((x, c), d) in self.xi.iter().zip(&self.cdf).zip(&self.density) {
            w.write_record([x.to_string(), c.to_string(), d.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::numerical(e.to_string(), "csv output"))?;
        Ok(())
    }
}

fn cell_widths(xi: &[f64]) -> Vec<f64> {
    let n = xi.len();
    (0..n)
        .map(|j| match j {
            0 => 0.5 * xi[1],
            j if j == n - 1 => 0.5 * (xi[n - 1] - xi[n - 2]),
            j => 0.5 * (xi[j + 1] - xi[j - 1]),
        })
        .collect()
}

fn cdf_between_midpoints(mids: &[f64], cdf: &[f64], xi: f64) -> f64 {
    let n = mids.len();
    if xi < 0.0 {
        return 0.0;
    }
    if xi <= mids[0] {
        // extend the first secant toward zero, kept within [0, cdf[0]]
        if n < 2 {
            return cdf[0];
        }
        let slope = (cdf[1] - cdf[0]) / (mids[1] - mids[0]);
        return (cdf[0] - slope * (mids[0] - xi)).clamp(0.0, cdf[0]);
    }
    if xi >= mids[n - 1] {
        return cdf[n - 1];
    }
    let j = mids.partition_point(|&m| m <= xi) - 1;
    let w = (xi - mids[j]) / (mids[j + 1] - mids[j]);
    cdf[j] + w * (cdf[j + 1] - cdf[j])
}

/// CDF and density of `L` from one row of `G_N`.
pub fn extract_distribution(surface: &GSurface, row: usize) -> Result<CostDistribution> {
    let xi = &surface.xi;
    let g = surface.row(row);
    let n = xi.len();
    let slopes: Vec<f64> = (0..n - 1).map(|j| (g[j + 1] - g[j]) / (xi[j + 1] - xi[j])).collect();
    let widths = cell_widths(xi);
    let mut density = vec![0.0; n];
    density[0] = (slopes[0] + 1.0) / widths[0];
    for j in 1..n - 1 {
        density[j] = (slopes[j] - slopes[j - 1]) / widths[j];
    }
    let mass = 1.0 + slopes[n - 2];
    if !mass.is_finite() || (mass - 1.0).abs() >= 0.01 {
        return Err(Error::GridResolution { mass });
    }
    for d in density.iter_mut() {
        *d = d.max(0.0);
    }
    let clipped = crate::numeric::compensated_sum(density.iter().zip(&widths).map(|(d, w)| d * w));
    if !(clipped > 0.0) {
        return Err(Error::GridResolution { mass: clipped });
    }
    for d in density.iter_mut() {
        *d /= clipped;
    }
    let mut cdf: Vec<f64> = slopes.iter().map(|s| (1.0 + s).clamp(0.0, 1.0)).collect();
    cdf.push(cdf[n - 2]);
    Ok(CostDistribution {
        moneyness: surface.log_moneyness[row].exp(),
        xi: xi.clone(),
        cdf,
        density,
        mean: g[0],
        mass,
    })
}

/// Cost distributions at each target moneyness, in the order given.
pub fn cost_distributions(model: &DistModel, targets: &[f64], config: &DistConfig) -> Result<Vec<CostDistribution>> {
    model.validate()?;
    config.validate()?;
    let xi_max = match config.xi_max {
        Some(x) => x,
        None => {
            let mut top = 0.0f64;
            for &k in targets {
                top = top.max(expected_discrete_cost(k, model)?);
            }
            let x = config.xi_max_multiple * top;
            if x > 1e-300 {
                x
            } else {
                1.0
            }
        }
    };
    let grid = DistGrid::build(model, targets, config, xi_max)?;
    let surface = final_surface(model, &grid)?;
    targets
        .iter()
        .map(|&k| {
            let row = surface
                .find(k)
                .ok_or_else(|| Error::numerical("target missing from final level", format!("moneyness {k}")))?;
            extract_distribution(&surface, row)
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between a distribution and a sample.
pub fn ks_distance(dist: &CostDistribution, samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mids = dist.midpoints();
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf_between_midpoints(&mids, &dist.cdf, x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

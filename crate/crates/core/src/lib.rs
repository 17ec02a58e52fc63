//! Expected liquidity cost of delta hedging a European option against a limit-order
//! supply curve.
//!
//! The crate is organised bottom-up:
//!
//! * [`black_scholes`]: prices, Greeks and the gamma-squared weight `f(t, x)`.
//! * [`unit_cost`]: the two-dimensional option-price quadrature for the unit cost `I`
//!   and its scaling to `alpha N^2 S_0 I`.
//! * [`hedge_sim`]: Monte Carlo delta hedging under fixed-interval and delta-threshold
//!   rebalancing.
//! * [`cost_dist`]: backward recursion for `E[(L - xi)^+]` and the cost density.
//! * [`supply_curve`]: supply curves and slopes from order-book snapshots, and the
//!   stationary Poisson order-flow book.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod black_scholes;
pub mod cost_dist;
pub mod error;
pub mod hedge_sim;
pub mod numeric;
pub mod supply_curve;
pub mod unit_cost;

pub use black_scholes::{MarketParams, OptionKind, OptionSpec};
pub use error::{Error, Result};

/// Trading days per year.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
/// Trading hours per day.
pub const TRADING_HOURS_PER_DAY: f64 = 6.5;
/// One trading day in years.
pub const DAY: f64 = 1.0 / TRADING_DAYS_PER_YEAR;
/// One trading hour in years.
pub const HOUR: f64 = 1.0 / (TRADING_DAYS_PER_YEAR * TRADING_HOURS_PER_DAY);

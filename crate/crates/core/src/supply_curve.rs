//! Supply curves from limit order books and the stationary book of a Poisson
//! order-flow model.
//!
//! Quantities are signed share counts: positive buys lift the asks, negative sells
//! hit the bids. `S(z)` is the average price per share paid for `z` shares, and
//! `S(0)` is the mid price.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Relative tolerance for prices lying on the tick grid.
const TICK_TOLERANCE: f64 = 1e-6;

/// Levels per side used by the continuous slope fit by default.
pub const DEFAULT_FIT_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub price: f64,
    pub size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

/// One snapshot of displayed liquidity. Asks ascend and bids descend from the touch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookSnapshot {
    pub asks: Vec<Level>,
    pub bids: Vec<Level>,
    pub tick: Option<f64>,
    pub mid: f64,
}

#[derive(Debug, Deserialize)]
struct LevelRecord {
    side: String,
    price: f64,
    size: f64,
}

impl BookSnapshot {
    /// Sorts both sides, checks the book and sets the mid to the average of the
    /// best quotes unless one is given.
    pub fn new(mut asks: Vec<Level>, mut bids: Vec<Level>, tick: Option<f64>, mid: Option<f64>) -> Result<Self> {
        asks.sort_by(|a, b| a.price.total_cmp(&b.price));
        bids.sort_by(|a, b| b.price.total_cmp(&a.price));
        let (Some(ask), Some(bid)) = (asks.first(), bids.first()) else {
            return Err(Error::InvalidBook(
                "both sides of the book need at least one level".into(),
            ));
        };
        let mid = mid.unwrap_or(0.5 * (ask.price + bid.price));
        let book = Self { asks, bids, tick, mid };
        book.validate()?;
        Ok(book)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidBook(m));
        for l in self.asks.iter().chain(&self.bids) {
            if !(l.price.is_finite() && l.price > 0.0) {
                return bad(format!("price {} is not positive", l.price));
            }
            if !(l.size.is_finite() && l.size > 0.0) {
                return bad(format!("size {} at {} is not positive", l.size, l.price));
            }
        }
        if !self.asks.windows(2).all(|w| w[1].price > w[0].price) {
            return bad("ask prices must increase strictly".into());
        }
        if !self.bids.windows(2).all(|w| w[1].price < w[0].price) {
            return bad("bid prices must decrease strictly".into());
        }
        if let (Some(a), Some(b)) = (self.asks.first(), self.bids.first()) {
            if a.price <= b.price {
                return bad(format!("best ask {} does not exceed best bid {}", a.price, b.price));
            }
            if !(self.mid >= b.price && self.mid <= a.price) {
                return bad(format!("mid {} lies outside the spread", self.mid));
            }
        }
        if let Some(tick) = self.tick {
            if !(tick.is_finite() && tick > 0.0) {
                return bad(format!("tick {tick} is not positive"));
            }
            for l in self.asks.iter().chain(&self.bids) {
                let n = l.price / tick;
                if (n - n.round()).abs() > TICK_TOLERANCE * n.max(1.0) {
                    return bad(format!("price {} is off the {tick} tick grid", l.price));
                }
            }
        }
        Ok(())
    }

    /// Reads `side,price,size` rows; side is `bid`/`ask` (or `buy`/`sell`).
    pub fn from_csv_reader<R: Read>(reader: R, tick: Option<f64>, mid: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let (mut asks, mut bids) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.deserialize::<LevelRecord>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            let level = Level {
                price: rec.price,
                size: rec.size,
            };
            match rec.side.to_ascii_lowercase().as_str() {
                "ask" | "sell" | "offer" => asks.push(level),
                "bid" | "buy" => bids.push(level),
                other => return Err(Error::Parse(format!("row {}: unknown side {other:?}", i + 1))),
            }
        }
        Self::new(asks, bids, tick, mid)
    }

    pub fn from_csv_path(path: &Path, tick: Option<f64>, mid: Option<f64>) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(f, tick, mid)
    }

    pub fn side(&self, side: Side) -> &[Level] {
        match side {
            Side::Ask => &self.asks,
            Side::Bid => &self.bids,
        }
    }

    pub fn depth(&self, side: Side) -> f64 {
        self.side(side).iter().map(|l| l.size).sum()
    }
}

/// Piecewise-constant marginal price `m(q)` as cumulative-size breakpoints per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalCurve {
    /// `(cumulative size at the end of the level, level price)`, nearest level first.
    pub asks: Vec<(f64, f64)>,
    pub bids: Vec<(f64, f64)>,
}

impl MarginalCurve {
    pub fn from_book(book: &BookSnapshot) -> Self {
        let cum = |levels: &[Level]| {
            let mut total = 0.0;
            levels
                .iter()
                .map(|l| {
                    total += l.size;
                    (total, l.price)
                })
                .collect()
        };
        Self {
            asks: cum(&book.asks),
            bids: cum(&book.bids),
        }
    }

    /// Price of the `|q|`-th share on the side `q` trades against; `q = 0` gives
    /// the best ask.
    pub fn price(&self, q: f64) -> Result<f64> {
        let side = if q >= 0.0 { &self.asks } else { &self.bids };
        let a = q.abs();
        let available = side.last().map_or(0.0, |l| l.0);
        side.iter()
            .find(|(cum, _)| a <= *cum)
            .map(|l| l.1)
            .ok_or(Error::InsufficientDepth {
                requested: a,
                available,
            })
    }
}

/// Average execution price of `z` shares; `z = 0` gives the mid.
pub fn supply_from_book(book: &BookSnapshot, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::domain("trade size must be finite"));
    }
    if z == 0.0 {
        return Ok(book.mid);
    }
    let side = if z > 0.0 { Side::Ask } else { Side::Bid };
    let wanted = z.abs();
    let mut left = wanted;
    let mut fills = Vec::new();
    for l in book.side(side) {
        let take = left.min(l.size);
        fills.push(take * l.price);
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    if left > 0.0 {
        return Err(Error::InsufficientDepth {
            requested: wanted,
            available: book.depth(side),
        });
    }
    Ok(compensated_sum(fills) / wanted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeRegime {
    /// Slope at zero size, by least squares through the origin over the first
    /// `levels` level breakpoints on each side.
    Continuous { levels: usize },
    /// Exact secant at trade size `q` (signed shares).
    Discrete { q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub alpha_buy: Option<f64>,
    pub alpha_sell: Option<f64>,
    pub points: usize,
    /// Root mean square of `S(z)/mid - 1 - alpha z` over the fitted points.
    pub rms_residual: f64,
    pub mid: f64,
    pub method: String,
}

/// Fitted linear slope per share of `S(z)/mid - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub alpha: f64,
    pub regime: SlopeRegime,
    pub diagnostics: FitDiagnostics,
}

fn relative_impact(book: &BookSnapshot, z: f64) -> Result<f64> {
    Ok(supply_from_book(book, z)? / book.mid - 1.0)
}

fn secant(book: &BookSnapshot, q: f64) -> Result<f64> {
    Ok(relative_impact(book, q)? / q)
}

fn origin_slope(points: &[(f64, f64)]) -> f64 {
    compensated_sum(points.iter().map(|(z, y)| z * y)) / compensated_sum(points.iter().map(|(z, _)| z * z))
}

fn rms(points: &[(f64, f64)], alpha: f64) -> f64 {
    (compensated_sum(points.iter().map(|(z, y)| (y - alpha * z).powi(2))) / points.len() as f64).sqrt()
}

pub fn fit_alpha(book: &BookSnapshot, regime: SlopeRegime) -> Result<SlopeFit> {
    book.validate()?;
    if book.asks.is_empty() || book.bids.is_empty() {
        return Err(Error::InvalidBook("a slope needs both sides of the book".into()));
    }
    match regime {
        SlopeRegime::Discrete { q } => {
            if !(q.is_finite() && q != 0.0) {
                return Err(Error::domain("discrete trade size must be nonzero"));
            }
            let alpha = secant(book, q)?;
            let other = secant(book, -q).ok();
            let (alpha_buy, alpha_sell) = if q > 0.0 {
                (Some(alpha), other)
            } else {
                (other, Some(alpha))
            };
            Ok(SlopeFit {
                alpha,
                regime,
                diagnostics: FitDiagnostics {
                    alpha_buy,
                    alpha_sell,
                    points: 1,
                    rms_residual: 0.0,
                    mid: book.mid,
                    method: "exact secant (S(q) - mid) / (mid q)".into(),
                },
            })
        }
        SlopeRegime::Continuous { levels } => {
            if levels == 0 {
                return Err(Error::config("continuous fit needs at least one level per side"));
            }
            let side_points = |side: Side, sign: f64| -> Result<Vec<(f64, f64)>> {
                let mut cum = 0.0;
                book.side(side)
                    .iter()
                    .take(levels)
                    .map(|l| {
                        cum += l.size;
                        let z = sign * cum;
                        Ok((z, relative_impact(book, z)?))
                    })
                    .collect()
            };
            let buys = side_points(Side::Ask, 1.0)?;
            let sells = side_points(Side::Bid, -1.0)?;
            let all: Vec<(f64, f64)> = buys.iter().chain(&sells).copied().collect();
            let alpha = origin_slope(&all);
            Ok(SlopeFit {
                alpha,
                regime,
                diagnostics: FitDiagnostics {
                    alpha_buy: Some(origin_slope(&buys)),
                    alpha_sell: Some(origin_slope(&sells)),
                    points: all.len(),
                    rms_residual: rms(&all, alpha),
                    mid: book.mid,
                    method: format!(
                        "least squares through the origin at the first {levels} level breakpoints per side"
                    ),
                },
            })
        }
    }
}

/// Poisson order-flow intensities per tick from the opposite best quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFlowRates {
    /// Limit order arrivals at tick `i` (index `i - 1`).
    pub limit: Vec<f64>,
    /// Market order arrivals, all absorbed at tick 1.
    pub market: f64,
    /// Cancellation rate per resting order at tick `i`.
    pub cancel: Vec<f64>,
}

impl OrderFlowRates {
    pub fn new(limit: Vec<f64>, market: f64, cancel: Vec<f64>) -> Result<Self> {
        let r = Self { limit, market, cancel };
        r.validate()?;
        Ok(r)
    }

    pub fn depth(&self) -> usize {
        self.limit.len()
    }

    /// Requires `limit[0] >= market`; equality gives an empty touch queue.
    pub fn validate(&self) -> Result<()> {
        if self.limit.is_empty() || self.limit.len() != self.cancel.len() {
            return Err(Error::config("limit and cancel rates need one entry per tick"));
        }
        if self.limit.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || !(self.market.is_finite() && self.market >= 0.0)
        {
            return Err(Error::domain("arrival rates must be nonnegative"));
        }
        if self.cancel.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::domain("cancel rates must be positive"));
        }
        if self.limit[0] < self.market {
            return Err(Error::ModelValidity(format!(
                "tick-1 arrivals {} fall short of market orders {}; the touch queue drains",
                self.limit[0], self.market
            )));
        }
        Ok(())
    }
}

/// Expected long-run depth at each tick.
pub fn stationary_book(rates: &OrderFlowRates) -> Result<Vec<f64>> {
    rates.validate()?;
    Ok(rates
        .limit
        .iter()
        .zip(&rates.cancel)
        .enumerate()
        .map(|(i, (l, c))| if i == 0 { (l - rates.market) / c } else { l / c })
        .collect())
}

/// Expected tick-1 depth at time `t` starting from an empty queue.
pub fn transient_depth(t: f64, limit: f64, market: f64, cancel: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be nonnegative, got {t}")));
    }
    if !(cancel > 0.0) {
        return Err(Error::domain("cancel rate must be positive"));
    }
    Ok((limit - market) / cancel * -(-cancel * t).exp_m1())
}

/// `k / i^a` for `i = 1..=depth`.
pub fn power_law_rates(k: f64, a: f64, depth: usize) -> Result<Vec<f64>> {
    if !(k.is_finite() && k > 0.0 && a.is_finite()) {
        return Err(Error::domain("power law needs k > 0 and finite exponent"));
    }
    if depth == 0 {
        return Err(Error::domain("depth must be at least one tick"));
    }
    Ok((1..=depth).map(|i| k / (i as f64).powf(a)).collect())
}

/// `(k, a)` from per-tick counts by least squares on `ln c_i = ln k - a ln i`.
/// Nonpositive counts are skipped.
pub fn fit_power_law(counts: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_finite() && **c > 0.0)
        .map(|(i, c)| (((i + 1) as f64).ln(), c.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::domain("power-law fit needs two positive counts"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(((my - slope * mx).exp(), -slope))
}

/// Symmetric book with depth `depths[i-1]` at `mid ± (i - 1/2) tick`. Empty ticks are
/// left out.
pub fn book_from_depths(depths: &[f64], tick: f64, mid: f64) -> Result<BookSnapshot> {
    if depths.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::domain("depths must be nonnegative"));
    }
    if !(tick > 0.0 && mid > 0.0) {
        return Err(Error::domain("tick and mid must be positive"));
    }
    let side = |sign: f64| -> Vec<Level> {
        depths
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(i, d)| Level {
                price: mid + sign * (i as f64 + 0.5) * tick,
                size: *d,
            })
            .collect()
    };
    let (asks, bids) = (side(1.0), side(-1.0));
    if asks.is_empty() {
        return Err(Error::InvalidBook("every depth is zero".into()));
    }
    if bids.last().is_some_and(|l| l.price <= 0.0) {
        return Err(Error::InvalidBook("bid side reaches a nonpositive price".into()));
    }
    BookSnapshot::new(asks, bids, None, Some(mid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(price: f64, size: f64) -> Level {
        Level { price, size }
    }

    fn small_book() -> BookSnapshot {
        BookSnapshot::new(
            vec![lv(10.02, 100.0), lv(10.01, 50.0)],
            vec![lv(9.99, 80.0), lv(9.98, 40.0)],
            Some(0.01),
            None,
        )
        .unwrap()
    }

    #[test]
    fn sorting_and_mid() {
        let b = small_book();
        assert_eq!(b.asks[0].price, 10.01);
        assert_eq!(b.bids[0].price, 9.99);
        assert!((b.mid - 10.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_books() {
        assert!(BookSnapshot::new(vec![lv(9.99, 1.0)], vec![lv(9.99, 1.0)], None, None).is_err());
        assert!(BookSnapshot::new(vec![lv(10.0, 0.0)], vec![lv(9.0, 1.0)], None, None).is_err());
        assert!(BookSnapshot::new(vec![lv(10.005, 1.0)], vec![lv(9.99, 1.0)], Some(0.01), None).is_err());
        assert!(BookSnapshot::new(vec![], vec![lv(9.99, 1.0)], None, None).is_err());
        assert!(BookSnapshot::new(vec![lv(10.0, 1.0), lv(10.0, 2.0)], vec![lv(9.0, 1.0)], None, None).is_err());
    }

    #[test]
    fn supply_levels() {
        let b = small_book();
        assert_eq!(supply_from_book(&b, 0.0).unwrap(), b.mid);
        assert_eq!(supply_from_book(&b, 1.0).unwrap(), 10.01);
        assert_eq!(supply_from_book(&b, 50.0).unwrap(), 10.01);
        assert_eq!(supply_from_book(&b, -1.0).unwrap(), 9.99);
        let s = supply_from_book(&b, 70.0).unwrap();
        assert!((s - (50.0 * 10.01 + 20.0 * 10.02) / 70.0).abs() < 1e-12);
        match supply_from_book(&b, 151.0) {
            Err(Error::InsufficientDepth { requested, available }) => {
                assert_eq!(requested, 151.0);
                assert_eq!(available, 150.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn marginal_curve_steps() {
        let m = MarginalCurve::from_book(&small_book());
        assert_eq!(m.price(0.0).unwrap(), 10.01);
        assert_eq!(m.price(50.0).unwrap(), 10.01);
        assert_eq!(m.price(50.5).unwrap(), 10.02);
        assert_eq!(m.price(-100.0).unwrap(), 9.98);
        assert!(m.price(1000.0).is_err());
    }

    #[test]
    fn flat_book_has_no_impact() {
        let b = BookSnapshot::new(vec![lv(10.0, 500.0)], vec![lv(9.99, 500.0)], None, Some(10.0)).unwrap();
        let fit = fit_alpha(&b, SlopeRegime::Discrete { q: 200.0 }).unwrap();
        assert_eq!(fit.alpha, 0.0);
    }

    #[test]
    fn one_sided_discrete_diagnostics() {
        let b = small_book();
        let f = fit_alpha(&b, SlopeRegime::Discrete { q: 120.0 }).unwrap();
        assert!(f.diagnostics.alpha_sell.is_some());
        let f = fit_alpha(&b, SlopeRegime::Discrete { q: 140.0 }).unwrap();
        assert!(f.diagnostics.alpha_sell.is_none());
        assert!(fit_alpha(&b, SlopeRegime::Discrete { q: 1e6 }).is_err());
        assert!(fit_alpha(&b, SlopeRegime::Continuous { levels: 0 }).is_err());
    }

    #[test]
    fn stationary_cases() {
        let r = OrderFlowRates::new(vec![10.0, 6.0], 4.0, vec![2.0, 3.0]).unwrap();
        assert_eq!(stationary_book(&r).unwrap(), vec![3.0, 2.0]);
        let edge = OrderFlowRates::new(vec![4.0], 4.0, vec![1.0]).unwrap();
        assert_eq!(stationary_book(&edge).unwrap(), vec![0.0]);
        assert!(matches!(
            OrderFlowRates::new(vec![3.0], 4.0, vec![1.0]),
            Err(Error::ModelValidity(_))
        ));
        let huge = OrderFlowRates::new(vec![10.0, 6.0], 4.0, vec![2.0, 1e12]).unwrap();
        assert!(stationary_book(&huge).unwrap()[1] < 1e-11);
    }

    #[test]
    fn transient_cases() {
        assert_eq!(transient_depth(0.0, 10.0, 4.0, 2.0).unwrap(), 0.0);
        assert!((transient_depth(1e3, 10.0, 4.0, 2.0).unwrap() - 3.0).abs() < 1e-12);
        let half = transient_depth(2f64.ln() / 2.0, 10.0, 4.0, 2.0).unwrap();
        assert!((half - 1.5).abs() < 1e-12);
        assert!(transient_depth(-1.0, 10.0, 4.0, 2.0).is_err());
    }

    #[test]
    fn power_law_cases() {
        assert_eq!(power_law_rates(3.0, 0.0, 4).unwrap(), vec![3.0; 4]);
        assert_eq!(power_law_rates(8.0, 1.0, 2).unwrap()[1], 4.0);
        let (k, a) = fit_power_law(&power_law_rates(5.0, 0.7, 10).unwrap()).unwrap();
        assert!((k - 5.0).abs() < 1e-9 && (a - 0.7).abs() < 1e-12);
        assert!(fit_power_law(&[1.0]).is_err());
    }

    #[test]
    fn depths_to_book() {
        let b = book_from_depths(&[5.0, 0.0, 7.0], 0.01, 10.0).unwrap();
        assert_eq!(b.asks.len(), 2);
        assert!((b.asks[0].price - 10.005).abs() < 1e-12);
        assert!((b.bids[1].price - 9.975).abs() < 1e-12);
        for z in [0.5, 2.0, 5.0] {
            assert!((supply_from_book(&b, z).unwrap() - 10.005).abs() < 1e-12);
        }
        assert!(book_from_depths(&[0.0, 0.0], 0.01, 10.0).is_err());
    }
}

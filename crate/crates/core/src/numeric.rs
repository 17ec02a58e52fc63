//! Small numerical building blocks shared by the quadrature, recursion and simulation code.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal cumulative distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Neumaier-compensated accumulator.
///
/// Summation order is still significant, so callers that fan work out in parallel
/// collect partial results in index order and feed them through one of these.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Quadrature nodes with their trapezoid weights on a (possibly non-uniform) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidAxis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TrapezoidAxis {
    /// Builds trapezoid weights for strictly increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 1..n {
            let h = nodes[i] - nodes[i - 1];
            weights[i - 1] += 0.5 * h;
            weights[i] += 0.5 * h;
        }
        Self { nodes, weights }
    }

    /// `n_steps + 1` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n_steps: usize) -> Self {
        let h = (b - a) / n_steps as f64;
        let mut nodes: Vec<f64> = (0..=n_steps).map(|i| a + h * i as f64).collect();
        nodes[n_steps] = b;
        Self::from_nodes(nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre rule mapped onto `[a, b]`, returned as (node, weight) pairs in increasing node order.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = gauss_quad::GaussLegendre::new(n.try_into().expect("at least one node"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (mid + half * x, half * w)).collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

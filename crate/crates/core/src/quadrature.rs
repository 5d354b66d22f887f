//! Gauss-Legendre rules, trapezoidal sums and graded node sets on `[0, 1]`.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Nodes are returned in increasing order. Computed by Newton iteration on the
/// Legendre recurrence, accurate to machine precision for the sizes used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A Gauss-Legendre rule that can be mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped `(node, weight)` pairs on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Trapezoidal rule for tabulated values.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

/// Trapezoidal weights `w` such that `trapezoid(x, y) == sum(w * y)`.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[j + 1] - x[j]);
        w[j] += h;
        w[j + 1] += h;
    }
    w
}

/// Composite Simpson rule on the intervals of `x`, one midpoint per interval.
#[derive(Debug, Clone)]
pub struct SimpsonRule {
    pub node_weights: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub midpoint_weights: Vec<f64>,
}

pub fn simpson_rule(x: &[f64]) -> SimpsonRule {
    let n = x.len();
    let mut node_weights = vec![0.0; n];
    let mut midpoints = Vec::with_capacity(n.saturating_sub(1));
    let mut midpoint_weights = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let h = x[j + 1] - x[j];
        node_weights[j] += h / 6.0;
        node_weights[j + 1] += h / 6.0;
        midpoints.push(0.5 * (x[j] + x[j + 1]));
        midpoint_weights.push(2.0 * h / 3.0);
    }
    SimpsonRule { node_weights, midpoints, midpoint_weights }
}

/// Running trapezoidal integral, starting at zero.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..x.len() {
        acc += 0.5 * (y[j] + y[j - 1]) * (x[j] - x[j - 1]);
        out.push(acc);
    }
    out
}

/// `n` equispaced nodes on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

/// Geometric sequence from `start` up to (excluding) `stop` with the given ratio.
pub fn geometric_nodes(start: f64, stop: f64, ratio: f64) -> Vec<f64> {
    debug_assert!(start > 0.0 && ratio > 1.0);
    let mut v = Vec::new();
    let mut x = start;
    while x < stop {
        v.push(x);
        x *= ratio;
    }
    v
}

/// Sorts, drops non-finite values and collapses nodes closer than `min_gap`.
pub fn sorted_unique(mut v: Vec<f64>, min_gap: f64) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if x - last <= min_gap => {}
            _ => out.push(x),
        }
    }
    out
}

/// Composite Gauss-Legendre quadrature on `[0, 1]` with panels graded
/// geometrically towards both endpoints.
///
/// Handles integrable endpoint singularities of logarithmic or algebraic type
/// (e.g. `log x`, `x^{-1/2}`) to roughly 1e-10 relative accuracy.
pub fn integrate_unit<F: FnMut(f64) -> f64>(mut f: F) -> f64 {
    thread_local! {
        static RULE: GaussRule = GaussRule::new(10);
    }
    let mut edges = Vec::with_capacity(2 * 40 + 18);
    edges.push(0.0);
    for k in (2..=40).rev() {
        edges.push(0.5f64.powi(k));
    }
    for j in 1..16 {
        edges.push(0.25 + 0.5 * j as f64 / 16.0);
    }
    for k in 2..=40 {
        edges.push(1.0 - 0.5f64.powi(k));
    }
    edges.push(1.0);
    edges.dedup();
    RULE.with(|rule| {
        edges
            .windows(2)
            .map(|e| rule.integrate(e[0], e[1], &mut f))
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(5);
        // degree 9 polynomial
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9) + 3.0 * x * x);
        let exact = 2f64.powi(10) / 10.0 + 8.0;
        assert!((v - exact).abs() < 1e-10);
        let total: f64 = gauss_legendre(12).1.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_integration_handles_endpoint_singularities() {
        let v = integrate_unit(|x| x.ln());
        assert!((v + 1.0).abs() < 1e-9, "{v}");
        let v = integrate_unit(|x| 0.5 / x.sqrt());
        assert!((v - 1.0).abs() < 1e-7, "{v}");
        let v = integrate_unit(|x| (1.0 - x).ln());
        assert!((v + 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn trapezoid_weights_agree_with_sum() {
        let x = vec![0.0, 0.1, 0.5, 0.7, 1.0];
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let w = trapezoid_weights(&x);
        let s: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((s - trapezoid(&x, &y)).abs() < 1e-15);
        let c = cumulative_trapezoid(&x, &y);
        assert!((c[4] - s).abs() < 1e-15);
    }

    #[test]
    fn simpson_rule_is_exact_for_cubics() {
        let x = vec![0.0, 0.1, 0.5, 0.7, 1.0];
        let r = simpson_rule(&x);
        let f = |v: f64| 4.0 * v * v * v - v + 2.0;
        let s: f64 = x.iter().zip(&r.node_weights).map(|(&v, w)| w * f(v)).sum::<f64>()
            + r.midpoints.iter().zip(&r.midpoint_weights).map(|(&v, w)| w * f(v)).sum::<f64>();
        assert!((s - 2.5).abs() < 1e-14, "{s}");
    }

    #[test]
    fn sorted_unique_collapses_close_nodes() {
        let v = sorted_unique(vec![0.3, 0.1, 0.1 + 1e-9, f64::NAN, 0.2], 1e-6);
        assert_eq!(v, vec![0.1, 0.2, 0.3]);
    }
}

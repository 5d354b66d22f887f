//! Penalized maximum-likelihood densities on a bounded interval.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bayes::{ClrDensity, MAX_LOG_DENSITY};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, trapezoid_weights};
use crate::splinebasis::{quantile_knots, KnotConfig, ZBasis};

use super::lbfgs::{minimize, LbfgsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnivariateConfig {
    /// Number of spline coefficients.
    pub dim: usize,
    pub degree: usize,
    pub lambda: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for UnivariateConfig {
    fn default() -> Self {
        Self { dim: 17, degree: 3, lambda: 10.0, max_iter: 500, grad_tol: 1e-4 }
    }
}

/// Serialized form of a [`UnivariateFit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFile {
    pub version: u32,
    pub bounds: (f64, f64),
    pub degree: usize,
    pub knots: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A fitted density on `(a, b)` with its CDF and quantile function.
#[derive(Debug, Clone)]
pub struct UnivariateFit {
    bounds: (f64, f64),
    density: ClrDensity,
    lambda: f64,
    loglik: f64,
    iterations: usize,
    converged: bool,
    cdf_nodes: Vec<f64>,
    cdf_values: Vec<f64>,
}

impl UnivariateFit {
    fn build(
        bounds: (f64, f64),
        basis: Arc<ZBasis>,
        theta: Vec<f64>,
        lambda: f64,
        loglik: f64,
        iterations: usize,
        converged: bool,
    ) -> Result<Self> {
        let grid = ClrDensity::refined_grid(&basis);
        let density = ClrDensity::with_grid(basis, theta, false, grid.clone())?;
        let f: Vec<f64> = grid.iter().map(|&y| density.pdf(y)).collect();
        let mut cdf_values = cumulative_trapezoid(&grid, &f);
        let total = *cdf_values.last().unwrap();
        cdf_values.iter_mut().for_each(|v| *v /= total);
        let (a, b) = bounds;
        let cdf_nodes = grid.iter().map(|&y| a + (b - a) * y).collect();
        Ok(Self { bounds, density, lambda, loglik, iterations, converged, cdf_nodes, cdf_values })
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// The density on the rescaled interval `[0, 1]`.
    pub fn density(&self) -> &ClrDensity {
        &self.density
    }

    pub fn theta(&self) -> &[f64] {
        self.density.theta()
    }

    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (a, b) = self.bounds;
        if !(x >= a && x <= b) {
            return 0.0;
        }
        self.density.pdf((x - a) / (b - a)) / (b - a)
    }

    /// Piecewise-linear interpolation of the cumulative trapezoid integral.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.cdf_nodes.len();
        if x <= self.cdf_nodes[0] {
            return 0.0;
        }
        if x >= self.cdf_nodes[n - 1] {
            return 1.0;
        }
        let k = self.cdf_nodes.partition_point(|&v| v <= x) - 1;
        let s = (x - self.cdf_nodes[k]) / (self.cdf_nodes[k + 1] - self.cdf_nodes[k]);
        self.cdf_values[k] + s * (self.cdf_values[k + 1] - self.cdf_values[k])
    }

    /// Inverse of [`UnivariateFit::cdf`].
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.cdf_values.len();
        if p <= 0.0 {
            return self.cdf_nodes[0];
        }
        if p >= 1.0 {
            return self.cdf_nodes[n - 1];
        }
        let k = (self.cdf_values.partition_point(|&v| v <= p) - 1).min(n - 2);
        let s = (p - self.cdf_values[k]) / (self.cdf_values[k + 1] - self.cdf_values[k]);
        self.cdf_nodes[k] + s * (self.cdf_nodes[k + 1] - self.cdf_nodes[k])
    }

    pub fn to_file(&self) -> MarginFile {
        let basis = self.density.basis();
        MarginFile {
            version: super::model::MODEL_VERSION,
            bounds: self.bounds,
            degree: basis.degree(),
            knots: basis.interior_knots().to_vec(),
            theta: self.theta().to_vec(),
            lambda: self.lambda,
            loglik: self.loglik,
            iterations: self.iterations,
            converged: self.converged,
        }
    }

    pub fn from_file(file: &MarginFile) -> Result<Self> {
        let basis = Arc::new(ZBasis::new(KnotConfig::new(file.knots.clone(), file.degree)?)?);
        Self::build(
            file.bounds,
            basis,
            file.theta.clone(),
            file.lambda,
            file.loglik,
            file.iterations,
            file.converged,
        )
    }
}

/// Maximizes `Σ log f_θ(y_i) − λ θᵀΩθ` for the sample rescaled to `[0, 1]`,
/// with knots at sample quantiles.
pub fn fit_univariate_density(
    sample: &[f64],
    bounds: (f64, f64),
    config: &UnivariateConfig,
) -> Result<UnivariateFit> {
    let (a, b) = bounds;
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("bounds must be finite with a < b"));
    }
    if sample.iter().any(|&x| !(x > a && x < b)) {
        return Err(Error::invalid(format!("sample values must lie inside ({a}, {b})")));
    }
    if config.degree < 1 || config.dim < config.degree.max(2) || !(config.lambda >= 0.0) {
        return Err(Error::invalid("invalid univariate configuration"));
    }
    let y: Vec<f64> = sample.iter().map(|&x| (x - a) / (b - a)).collect();
    let basis = Arc::new(ZBasis::new(quantile_knots(&y, config.dim - config.degree, config.degree)?)?);
    let grid = ClrDensity::refined_grid(&basis);
    let weights = trapezoid_weights(&grid);
    let grid_design = basis.design(&grid, 0);
    let dim = basis.dim();
    let mut sample_sum = vec![0.0; dim];
    for row in basis.design(&y, 0) {
        for (s, v) in sample_sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    let omega = basis.curvature_matrix();
    let n = y.len() as f64;
    let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut norm = 0.0;
        let mut moment = vec![0.0; dim];
        for (row, w) in grid_design.iter().zip(&weights) {
            let p: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            if !(p.abs() <= MAX_LOG_DENSITY) {
                return Err(Error::numerical("log-density overflows"));
            }
            let e = w * p.exp();
            norm += e;
            for (m, z) in moment.iter_mut().zip(row) {
                *m += e * z;
            }
        }
        let v = DVector::from_column_slice(theta);
        let pen = &omega * &v;
        let lin: f64 = sample_sum.iter().zip(theta).map(|(a, b)| a * b).sum();
        let value = lin - n * norm.ln() - config.lambda * v.dot(&pen);
        let grad = (0..dim)
            .map(|i| -(sample_sum[i] - n * moment[i] / norm - 2.0 * config.lambda * pen[i]))
            .collect();
        Ok((-value, grad))
    };
    let res = minimize(
        objective,
        &vec![0.0; dim],
        &LbfgsConfig { max_iter: config.max_iter, grad_tol: config.grad_tol, ..Default::default() },
    )?;
    let v = DVector::from_column_slice(&res.x);
    let penalty = config.lambda * v.dot(&(&omega * &v));
    let loglik = -res.f + penalty - n * (b - a).ln();
    UnivariateFit::build(bounds, basis, res.x, config.lambda, loglik, res.iterations, res.converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn uniform_sample_gives_small_coefficients() {
        let cfg = UnivariateConfig { dim: 9, lambda: 1.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut norms = Vec::new();
        for n in [200, 5000] {
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..5.0)).collect();
            let fit = fit_univariate_density(&s, (2.0, 5.0), &cfg).unwrap();
            assert!(fit.converged());
            norms.push(norm(fit.theta()));
        }
        assert!(norms[0] < 0.5, "{norms:?}");
        assert!(norms[1] < norms[0], "{norms:?}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s: Vec<f64> = (0..300).map(|_| 1.0 + 99.0 * rng.random::<f64>().powi(3)).collect();
        let fit = fit_univariate_density(&s, (1.0, 100.0), &UnivariateConfig::default()).unwrap();
        for k in 1..50 {
            let x = 1.0 + 99.0 * k as f64 / 50.0;
            assert!((fit.quantile(fit.cdf(x)) - x).abs() < 1e-6);
        }
        assert!((fit.cdf(100.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_a_skewed_density() {
        // Beta(2, 5) on (0, 1).
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beta = rand_distr::Beta::new(2.0, 5.0).unwrap();
        let s: Vec<f64> = (0..4000).map(|_| rand_distr::Distribution::sample(&beta, &mut rng)).collect();
        let cfg = UnivariateConfig { dim: 9, lambda: 1e-3, ..Default::default() };
        let fit = fit_univariate_density(&s, (0.0, 1.0), &cfg).unwrap();
        for x in [0.1f64, 0.2, 0.3, 0.5] {
            let truth = 30.0 * x * (1.0 - x).powi(4);
            assert!((fit.pdf(x) - truth).abs() < 0.15 * truth.max(1.0), "x={x}: {} vs {truth}", fit.pdf(x));
        }
    }

    #[test]
    fn margin_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1.0)).collect();
        let fit = fit_univariate_density(&s, (0.0, 1.0), &UnivariateConfig { dim: 7, ..Default::default() }).unwrap();
        let back = UnivariateFit::from_file(&fit.to_file()).unwrap();
        assert_eq!(back.cdf(0.37), fit.cdf(0.37));
        assert_eq!(back.pdf(0.81), fit.pdf(0.81));
    }
}

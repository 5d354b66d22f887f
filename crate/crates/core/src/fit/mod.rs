//! Estimation of Pickands functions from copula samples.

pub mod lbfgs;
pub mod mcmc;
pub mod model;
pub mod objective;
pub mod random;
pub mod univariate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{z_value, CfgEstimate};
use crate::pickands::validate_pickands;
use crate::pipeline::pickands_from_theta;
use crate::splinebasis::{quantile_knots, quantile_sorted, ZBasis};

pub use lbfgs::{minimize, LbfgsConfig, LbfgsResult};
pub use mcmc::{mcmc_sample, Chain, Metropolis};
pub use model::{FitDiagnostics, FittedModel, ModelFile};
pub use objective::{build_h_hat, HHat, Objective};
pub use random::{random_pickands, RandomPickands};
pub use univariate::{fit_univariate_density, UnivariateConfig, UnivariateFit};

/// Minimum sample size accepted by [`optimize`].
pub const MIN_SAMPLE: usize = 30;

/// Number of histogram bins used by [`ordering_heuristic`].
pub const MODE_BINS: usize = 32;

/// Smallest gap kept between consecutive x-grid nodes.
pub const GRID_MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Number of spline coefficients.
    pub basis_dim: usize,
    pub degree: usize,
    /// Curvature penalty factor.
    pub lambda: f64,
    /// Interior nodes of the interpolation grid.
    pub grid_k: usize,
    pub max_iter: usize,
    /// Gradient ∞-norm at which the optimizer stops.
    pub grad_tol: f64,
    /// Rescale the Williamson grid when its `W(0⁺)` estimate drifts from 1.
    pub normalize_w: bool,
    /// Fit on `1 − z` when the histogram mode of `z` lies below ½.
    pub ordering_heuristic: bool,
    /// Overrides the heuristic when set.
    pub force_flip: Option<bool>,
    /// Start from the center model instead of the uniform density.
    pub center: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            basis_dim: 13,
            degree: 3,
            lambda: 1e-4,
            grid_k: 78,
            max_iter: 500,
            grad_tol: 1e-3,
            normalize_w: true,
            ordering_heuristic: true,
            force_flip: None,
            center: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if self.grid_k < 8 {
            return Err(Error::invalid("grid_k must be at least 8"));
        }
        if self.degree < 1 || self.basis_dim < self.degree.max(2) {
            return Err(Error::invalid(format!(
                "basis_dim must be at least max(2, degree) = {}",
                self.degree.max(2)
            )));
        }
        if !(self.grad_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("grad_tol and max_iter must be positive"));
        }
        Ok(())
    }
}

/// `z = log u / log(uv)` for every row with both coordinates in `(0, 1)`.
///
/// Other rows are skipped with a warning; a sample without valid rows is an error.
pub fn z_transform(sample: &[(f64, f64)]) -> Result<Vec<f64>> {
    let mut z = Vec::with_capacity(sample.len());
    for (i, &(u, v)) in sample.iter().enumerate() {
        if u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0 {
            z.push(z_value(u, v));
        } else {
            log::warn!("skipping row {i}: ({u}, {v}) is not inside the unit square");
        }
    }
    if z.is_empty() {
        return Err(Error::invalid("no rows inside the open unit square"));
    }
    Ok(z)
}

/// x-grid nodes `q + Ã(q) − 1` for an estimate `Ã` at quantile levels `q`.
///
/// `Ã` is clamped into the Pickands bounds, `0` and `1` are added, and nodes
/// closer than [`GRID_MIN_GAP`] to their predecessor (or to 1) are dropped.
pub fn x_grid_from_estimate<F: Fn(f64) -> Result<f64>>(q: &[f64], a: F) -> Result<Vec<f64>> {
    let mut raw = Vec::with_capacity(q.len());
    for &qi in q {
        let v = a(qi)?.clamp(qi.max(1.0 - qi), 1.0);
        raw.push(qi + v - 1.0);
    }
    raw.sort_by(|a, b| a.total_cmp(b));
    let mut grid = vec![0.0];
    for x in raw {
        if x >= grid[grid.len() - 1] + GRID_MIN_GAP && x <= 1.0 - GRID_MIN_GAP {
            grid.push(x);
        }
    }
    if grid.len() < 3 {
        return Err(Error::invalid(format!(
            "interpolation grid degenerates to {} interior nodes",
            grid.len() - 1
        )));
    }
    grid.push(1.0);
    Ok(grid)
}

/// Interpolation grid from `k` sample quantiles of `z` and the CFG estimate.
pub fn empirical_w_grid(z: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::invalid("need at least two grid nodes"));
    }
    let cfg = CfgEstimate::from_z(z)?;
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q: Vec<f64> =
        (1..=k).map(|i| quantile_sorted(&sorted, i as f64 / (k + 1) as f64)).collect();
    x_grid_from_estimate(&q, |t| cfg.value(t))
}

/// Whether to fit on `1 − z`: true when every modal bin of a 32-bin histogram
/// is centered below ½.
pub fn ordering_heuristic(z: &[f64]) -> bool {
    let mut counts = [0usize; MODE_BINS];
    for &v in z {
        if v.is_finite() {
            let b = ((v.clamp(0.0, 1.0) * MODE_BINS as f64) as usize).min(MODE_BINS - 1);
            counts[b] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return false;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == max)
        .all(|(b, _)| (b as f64 + 0.5) / (MODE_BINS as f64) < 0.5)
}

/// Fits the spline model to a `z` sample by maximizing the penalized log-likelihood.
pub fn optimize(z: &[f64], config: &FitConfig) -> Result<FittedModel> {
    config.validate()?;
    if z.len() < MIN_SAMPLE {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLE} observations, got {}", z.len())));
    }
    if z.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::invalid("z sample must lie in (0, 1)"));
    }
    let flipped = config.force_flip.unwrap_or(config.ordering_heuristic && ordering_heuristic(z));
    let zz: Vec<f64> = if flipped { z.iter().map(|v| 1.0 - v).collect() } else { z.to_vec() };
    let x_grid = empirical_w_grid(&zz, config.grid_k)?;
    let knots = quantile_knots(&x_grid[1..x_grid.len() - 1], config.basis_dim - config.degree, config.degree)?;
    let basis = Arc::new(ZBasis::new(knots)?);
    let objective = Objective::new(basis.clone(), &x_grid, &zz, config.lambda, config.center)?;
    let lb = LbfgsConfig { max_iter: config.max_iter, grad_tol: config.grad_tol, ..Default::default() };
    let res = minimize(
        |th| objective.value_and_gradient(th).map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect())),
        &vec![0.0; basis.dim()],
        &lb,
    )?;
    if !res.converged {
        log::warn!("optimizer stopped after {} iterations with gradient norm {:.3e}", res.iterations, res.grad_norm);
    }
    let penalty = config.lambda * objective.curvature(&res.x);
    let diagnostics = FitDiagnostics {
        loglik: -res.f + penalty,
        penalty,
        iterations: res.iterations,
        converged: res.converged,
    };
    let model = FittedModel::assemble(
        basis,
        res.x,
        config.center,
        flipped,
        config.lambda,
        config.normalize_w,
        diagnostics,
    )?;
    let diag = validate_pickands(model.pickands());
    if !diag.is_valid(1e-6) {
        log::warn!("fitted Pickands function violates constraints: {diag:?}");
    }
    Ok(model)
}

/// Fits a copula sample: `z`-transform followed by [`optimize`].
pub fn fit_copula(sample: &[(f64, f64)], config: &FitConfig) -> Result<FittedModel> {
    optimize(&z_transform(sample)?, config)
}

/// Runs the construction pipeline for `theta`, retrying with normalization
/// when the unnormalized grid fails.
pub(crate) fn pipeline_with_retry(
    basis: Arc<ZBasis>,
    theta: &[f64],
    center: bool,
    normalize: bool,
) -> Result<crate::pipeline::PipelineOutput> {
    match pickands_from_theta(basis.clone(), theta, center, normalize) {
        Err(e) if !normalize => {
            log::debug!("retrying with normalization after: {e}");
            pickands_from_theta(basis, theta, center, true)
        }
        r => r,
    }
}

//! Bayes-space operations on densities over `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{geometric_nodes, integrate_unit, linspace, simpson_rule, sorted_unique, trapezoid};
use crate::splinebasis::ZBasis;

/// Largest admissible magnitude of a log-density before `exp` overflows in practice.
pub const MAX_LOG_DENSITY: f64 = 700.0;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density on `[0, 1]` given by an unnormalized function and its integral.
#[derive(Clone)]
pub struct Pdf {
    unnormalized: RealFn,
    norm: f64,
}

impl fmt::Debug for Pdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pdf").field("norm", &self.norm).finish()
    }
}

impl Pdf {
    /// Normalizes `f` by graded Gauss-Legendre quadrature.
    pub fn new<F>(f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let norm = integrate_unit(&f);
        Self::with_norm(Arc::new(f), norm)
    }

    fn with_norm(unnormalized: RealFn, norm: f64) -> Result<Self> {
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::numerical(format!("density normalization is {norm}")));
        }
        Ok(Self { unnormalized, norm })
    }

    /// Uniform density.
    pub fn uniform() -> Self {
        Self { unnormalized: Arc::new(|_| 1.0), norm: 1.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.unnormalized)(x) / self.norm
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }
}

/// `x ↦ exp p(x) / ∫ exp p`, the integral taken by the trapezoidal rule on `grid`.
pub fn clr_inverse<P>(p: P, grid: &[f64]) -> Result<Pdf>
where
    P: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let v = p(x);
        if !(v.abs() <= MAX_LOG_DENSITY) {
            return Err(Error::numerical(format!("log-density {v} at x = {x} overflows")));
        }
        values.push(v.exp());
    }
    let norm = trapezoid(grid, &values);
    Pdf::with_norm(Arc::new(move |x| p(x).exp()), norm)
}

/// Centered log-ratio transform of a density: `log f` minus its mean.
#[derive(Clone)]
pub struct ClrFunction {
    log_f: RealFn,
    mean: f64,
}

impl ClrFunction {
    pub fn eval(&self, x: f64) -> f64 {
        (self.log_f)(x) - self.mean
    }

    /// `∫ log f`.
    pub fn mean(&self) -> f64 {
        self.mean
    }
}

pub fn clr<F>(f: F) -> Result<ClrFunction>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let mut bad = None;
    let mean = integrate_unit(|x| {
        let v = f(x);
        if !(v > 0.0) {
            bad = Some((x, v));
        }
        v.ln()
    });
    if let Some((x, v)) = bad {
        return Err(Error::invalid(format!("density value {v} at x = {x} is not positive")));
    }
    if !mean.is_finite() {
        return Err(Error::numerical("mean of log-density is not finite"));
    }
    Ok(ClrFunction { log_f: Arc::new(move |x| f(x).ln()), mean })
}

/// Perturbation `f ⊕ g ∝ f g`.
pub fn perturb(f: &Pdf, g: &Pdf) -> Result<Pdf> {
    let (f, g) = (f.clone(), g.clone());
    Pdf::new(move |x| f.eval(x) * g.eval(x))
}

/// Powering `α ⊙ f ∝ f^α`.
pub fn power(alpha: f64, f: &Pdf) -> Result<Pdf> {
    let f = f.clone();
    Pdf::new(move |x| f.eval(x).powf(alpha))
}

/// Total variation distance `½ ∫ |f − g|` by the trapezoidal rule on 2049 nodes.
pub fn tvd<F, G>(f: F, g: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    tvd_on(f, g, &linspace(0.0, 1.0, 2049))
}

pub fn tvd_on<F, G>(f: F, g: G, grid: &[f64]) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let diff: Vec<f64> = grid.iter().map(|&x| (f(x) - g(x)).abs()).collect();
    0.5 * trapezoid(grid, &diff)
}

/// Density `exp(p_θ) / I` where `p_θ = Σ θ_i Z_i` (plus the projected center when enabled).
///
/// `I` is the composite Simpson sum over the grid intervals.
#[derive(Debug, Clone)]
pub struct ClrDensity {
    basis: Arc<ZBasis>,
    theta: Vec<f64>,
    center_enabled: bool,
    coeffs: Vec<f64>,
    grid: Vec<f64>,
    norm: f64,
}

impl ClrDensity {
    /// Uses [`ClrDensity::default_grid`] for the normalization integral.
    pub fn new(basis: Arc<ZBasis>, theta: Vec<f64>, center_enabled: bool) -> Result<Self> {
        let grid = Self::default_grid(&basis);
        Self::with_grid(basis, theta, center_enabled, grid)
    }

    pub fn with_grid(
        basis: Arc<ZBasis>,
        theta: Vec<f64>,
        center_enabled: bool,
        grid: Vec<f64>,
    ) -> Result<Self> {
        if theta.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if grid.len() < 2 || grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return Err(Error::invalid("normalization grid must span [0, 1]"));
        }
        let coeffs = effective_coefficients(&basis, &theta, center_enabled);
        let rule = simpson_rule(&grid);
        let nodes = grid.iter().zip(&rule.node_weights);
        let mids = rule.midpoints.iter().zip(&rule.midpoint_weights);
        let mut z = vec![0.0; basis.dim()];
        let mut norm = 0.0;
        for (&x, &w) in nodes.chain(mids) {
            basis.eval_into(x, 0, &mut z);
            let p: f64 = z.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            if !(p.abs() <= MAX_LOG_DENSITY) {
                return Err(Error::numerical(format!("log-density {p} at x = {x} overflows")));
            }
            norm += w * p.exp();
        }
        Ok(Self { basis, theta, center_enabled, coeffs, grid, norm })
    }

    /// 512 equispaced nodes plus the interior knots.
    pub fn default_grid(basis: &ZBasis) -> Vec<f64> {
        let mut g = linspace(0.0, 1.0, 512);
        g.extend_from_slice(basis.interior_knots());
        sorted_unique(g, 0.0)
    }

    /// The default grid plus geometric refinement towards both endpoints,
    /// where centered densities change fastest.
    pub fn refined_grid(basis: &ZBasis) -> Vec<f64> {
        let mut g = Self::default_grid(basis);
        let near = geometric_nodes(1e-10, 0.02, 1.15);
        g.extend(near.iter().map(|&x| 1.0 - x));
        g.extend(near);
        sorted_unique(g, 1e-14)
    }

    /// The clr spline `p_θ(x)`.
    pub fn log_density(&self, x: f64) -> f64 {
        self.basis.spline(&self.coeffs, x, 0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_density(x).exp() / self.norm
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Spline coefficients including the center term.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Arc<ZBasis> {
        &self.basis
    }

    pub fn center_enabled(&self) -> bool {
        self.center_enabled
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Shares the density as a [`Pdf`] (same normalization constant).
    pub fn to_pdf(&self) -> Pdf {
        let me = self.clone();
        Pdf { unnormalized: Arc::new(move |x| me.log_density(x).exp()), norm: self.norm }
    }
}

pub(crate) fn effective_coefficients(basis: &ZBasis, theta: &[f64], center: bool) -> Vec<f64> {
    if center {
        basis.project_center().iter().zip(theta).map(|(c, t)| c + t).collect()
    } else {
        theta.to_vec()
    }
}

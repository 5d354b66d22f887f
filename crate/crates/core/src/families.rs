//! Parametric extreme-value families and classical nonparametric estimators.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::pickands::{khoudraji, Khoudraji, PickandsFunction};
use crate::quadrature::{cumulative_trapezoid, linspace};

/// One-parameter symmetric extreme-value families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gumbel,
    Galambos,
    HuslerReiss,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gumbel => "gumbel",
            Family::Galambos => "galambos",
            Family::HuslerReiss => "husler-reiss",
        }
    }
}

/// A family member before any asymmetry is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricFamily {
    family: Family,
    theta: f64,
}

impl SymmetricFamily {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        let ok = match family {
            Family::Gumbel => theta >= 1.0,
            Family::Galambos | Family::HuslerReiss => theta > 0.0,
        };
        if !ok || !theta.is_finite() {
            return Err(Error::invalid(format!("parameter {theta} out of range for {}", family.name())));
        }
        Ok(Self { family, theta })
    }
}

impl PickandsFunction for SymmetricFamily {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, 1.0);
        match self.family {
            Family::Gumbel => gumbel(self.theta, t),
            Family::Galambos => galambos(self.theta, t),
            Family::HuslerReiss => husler_reiss(self.theta, t),
        }
    }

    fn is_independence(&self) -> bool {
        self.family == Family::Gumbel && self.theta == 1.0
    }
}

/// `(t^θ + (1−t)^θ)^{1/θ}` with derivatives; valid for any θ > 0.
fn power_mean(theta: f64, t: f64) -> (f64, f64, f64) {
    let s_ = 1.0 - t;
    let sum = t.powf(theta) + s_.powf(theta);
    let d = t.powf(theta - 1.0) - s_.powf(theta - 1.0);
    let e = t.powf(theta - 2.0) + s_.powf(theta - 2.0);
    let a = sum.powf(1.0 / theta);
    let a1 = sum.powf(1.0 / theta - 1.0) * d;
    let a2 = (1.0 - theta) * sum.powf(1.0 / theta - 2.0) * d * d
        + (theta - 1.0) * sum.powf(1.0 / theta - 1.0) * e;
    (a, a1, a2)
}

fn gumbel(theta: f64, t: f64) -> (f64, f64, f64) {
    if theta == 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = power_mean(theta, t);
    (a, a1, if a2.is_nan() { f64::INFINITY } else { a2 })
}

fn galambos(theta: f64, t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (1.0, -1.0, f64::INFINITY);
    }
    if t >= 1.0 {
        return (1.0, 1.0, f64::INFINITY);
    }
    // 1 − A = q / G with q = t(1−t) and G the power mean
    let (g, g1, g2) = power_mean(theta, t);
    let q = t * (1.0 - t);
    let q1 = 1.0 - 2.0 * t;
    let r = q / g;
    let r1 = (q1 - r * g1) / g;
    let r2 = (-2.0 - 2.0 * r1 * g1 - r * g2) / g;
    (1.0 - r, -r1, -r2)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `φ(t) = t Φ(θ + log(t/(1−t)) / (2θ))` and two derivatives.
fn hr_phi(theta: f64, t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 1.0, 0.0);
    }
    let s_ = 1.0 - t;
    let g = theta + (t / s_).ln() / (2.0 * theta);
    let g1 = 1.0 / (2.0 * theta * t * s_);
    let cdf = std_normal_cdf(g);
    let pdf = std_normal_pdf(g);
    let finite_or_zero = |v: f64| if v.is_finite() { v } else { 0.0 };
    let d1 = cdf + finite_or_zero(pdf / (2.0 * theta * s_));
    let d2 = finite_or_zero(pdf * (g1 - g * g1 / (2.0 * theta * s_) + 1.0 / (2.0 * theta * s_ * s_)));
    (t * cdf, d1, d2)
}

fn husler_reiss(theta: f64, t: f64) -> (f64, f64, f64) {
    let (a, a1, a2) = hr_phi(theta, t);
    let (b, b1, b2) = hr_phi(theta, 1.0 - t);
    (a + b, a1 - b1, a2 + b2)
}

/// A family member with optional asymmetry `(α, β)`.
#[derive(Debug, Clone, Copy)]
pub struct ParametricPickands {
    base: SymmetricFamily,
    asym: Option<Khoudraji<SymmetricFamily>>,
}

impl ParametricPickands {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        Ok(Self { base: SymmetricFamily::new(family, theta)?, asym: None })
    }

    pub fn with_asymmetry(family: Family, theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        let base = SymmetricFamily::new(family, theta)?;
        let asym = if alpha == 1.0 && beta == 1.0 { None } else { Some(khoudraji(base, alpha, beta)?) };
        Ok(Self { base, asym })
    }

    pub fn family(&self) -> Family {
        self.base.family
    }

    pub fn theta(&self) -> f64 {
        self.base.theta
    }

    pub fn asymmetry(&self) -> (f64, f64) {
        self.asym.map(|k| k.params()).unwrap_or((1.0, 1.0))
    }
}

impl PickandsFunction for ParametricPickands {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match &self.asym {
            Some(k) => k.eval(t),
            None => self.base.eval(t),
        }
    }

    fn is_independence(&self) -> bool {
        self.base.is_independence()
    }
}

/// Value or derivative of a parametric Pickands function.
pub fn family_pickands(p: &ParametricPickands, t: f64, deriv_order: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("t = {t} outside [0, 1]")));
    }
    let (a, a1, a2) = p.eval(t);
    match deriv_order {
        0 => Ok(a),
        1 => Ok(a1),
        2 => Ok(a2),
        _ => Err(Error::invalid("only derivatives up to order 2 are supported")),
    }
}

fn exponential_margins(sample: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    sample
        .iter()
        .map(|&(u, v)| {
            if u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0 {
                Ok((-u.ln(), -v.ln()))
            } else {
                Err(Error::invalid(format!("pair ({u}, {v}) outside (0, 1)^2")))
            }
        })
        .collect()
}

/// Pickands' estimator on copula-scale data, via unit-exponential margins.
pub fn pickands_estimator(sample: &[(f64, f64)], t: f64) -> Result<f64> {
    Ok(pickands_estimator_grid(sample, &[t])?[0])
}

pub fn pickands_estimator_grid(sample: &[(f64, f64)], t_grid: &[f64]) -> Result<Vec<f64>> {
    let xy = exponential_margins(sample)?;
    let n = xy.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("t = {t} outside [0, 1]")));
            }
            let mean = if t <= 0.0 {
                xy.iter().map(|p| p.0).sum::<f64>() / n
            } else if t >= 1.0 {
                xy.iter().map(|p| p.1).sum::<f64>() / n
            } else {
                xy.iter().map(|&(x, y)| (x / (1.0 - t)).min(y / t)).sum::<f64>() / n
            };
            Ok(1.0 / mean)
        })
        .collect()
}

/// Pickands' estimator clamped to the admissible band and convexified.
pub fn pickands_estimator_convex(sample: &[(f64, f64)], t_grid: &[f64]) -> Result<Vec<f64>> {
    let raw = pickands_estimator_grid(sample, t_grid)?;
    let clamped: Vec<f64> = raw
        .iter()
        .zip(t_grid)
        .map(|(&a, &t)| a.clamp(t.max(1.0 - t), 1.0))
        .collect();
    Ok(greatest_convex_minorant(t_grid, &clamped))
}

/// Largest convex function below the points `(t_i, y_i)`, evaluated at each `t_i`.
pub fn greatest_convex_minorant(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n <= 2 {
        return y.to_vec();
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (t[b] - t[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (t[i] - t[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0; n];
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for i in a..=b {
            let w = (t[i] - t[a]) / (t[b] - t[a]);
            out[i] = y[a] + w * (y[b] - y[a]);
        }
    }
    out
}

/// `z = log u / log(uv)` for pairs in `(0, 1)²`.
pub fn z_value(u: f64, v: f64) -> f64 {
    let lu = u.ln();
    lu / (lu + v.ln())
}

/// Number of integration nodes of the CFG estimator.
pub const CFG_NODES: usize = 1024;

/// The CFG estimator `Ã(t) = exp ∫_0^t (H̃(z) − z) / (z(1 − z)) dz`.
#[derive(Debug, Clone)]
pub struct CfgEstimate {
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CfgEstimate {
    /// Builds the estimator from any CDF of `Z` on `[0, 1]`.
    pub fn from_cdf<H: Fn(f64) -> f64>(h: H) -> Self {
        let grid = linspace(0.0, 1.0, CFG_NODES);
        let integrand: Vec<f64> = grid
            .iter()
            .map(|&z| if z <= 0.0 || z >= 1.0 { 0.0 } else { (h(z) - z) / (z * (1.0 - z)) })
            .collect();
        let cumulative = cumulative_trapezoid(&grid, &integrand);
        Self { grid, cumulative }
    }

    /// Uses the empirical CDF of the given `z` values.
    pub fn from_z(z: &[f64]) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        let mut sorted = z.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len() as f64;
        Ok(Self::from_cdf(|x| sorted.partition_point(|&v| v <= x) as f64 / n))
    }

    pub fn from_sample(sample: &[(f64, f64)]) -> Result<Self> {
        let xy = exponential_margins(sample)?;
        let z: Vec<f64> = xy.iter().map(|&(x, y)| x / (x + y)).collect();
        Self::from_z(&z)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("t = {t} outside [0, 1]")));
        }
        let h = self.grid[1] - self.grid[0];
        let k = ((t / h).floor() as usize).min(self.grid.len() - 2);
        let w = (t - self.grid[k]) / h;
        Ok((self.cumulative[k] + w * (self.cumulative[k + 1] - self.cumulative[k])).exp())
    }
}

pub fn cfg_estimator(sample: &[(f64, f64)], t_grid: &[f64]) -> Result<Vec<f64>> {
    let est = CfgEstimate::from_sample(sample)?;
    t_grid.iter().map(|&t| est.value(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pickands::validate_pickands;

    fn check_derivatives(p: &ParametricPickands) {
        for k in 1..=50 {
            let t = k as f64 / 51.0;
            let h = 1e-6;
            let (_, d1, d2) = p.eval(t);
            let fd1 = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
            let fd2 = (p.eval(t + h).1 - p.eval(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() <= 1e-5 * d1.abs().max(1.0), "{p:?} t={t}: {d1} vs {fd1}");
            assert!((d2 - fd2).abs() <= 1e-5 * d2.abs().max(1.0), "{p:?} t={t}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn table_values() {
        let g1 = ParametricPickands::new(Family::Gumbel, 1.0).unwrap();
        assert_eq!(g1.value(0.3), 1.0);
        assert!(g1.is_independence());
        let g2 = ParametricPickands::new(Family::Gumbel, 2.0).unwrap();
        assert!((g2.value(0.5) - 0.5f64.sqrt()).abs() < 1e-15);
        let gal = ParametricPickands::new(Family::Galambos, 1.0).unwrap();
        assert!((gal.value(0.5) - 0.75).abs() < 1e-15);
        assert!(ParametricPickands::new(Family::Gumbel, 0.5).is_err());
        assert!(ParametricPickands::new(Family::HuslerReiss, 0.0).is_err());
        assert!(family_pickands(&g2, 1.5, 0).is_err());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for th in [1.1, 1.5, 2.0, 3.0, 4.0] {
            check_derivatives(&ParametricPickands::new(Family::Gumbel, th).unwrap());
        }
        for th in [0.5, 0.75, 1.0, 1.5, 3.0] {
            check_derivatives(&ParametricPickands::new(Family::Galambos, th).unwrap());
        }
        for th in [0.5, 1.0, 2.0] {
            check_derivatives(&ParametricPickands::new(Family::HuslerReiss, th).unwrap());
        }
        check_derivatives(&ParametricPickands::with_asymmetry(Family::Gumbel, 3.0, 0.5, 1.0).unwrap());
    }

    #[test]
    fn families_satisfy_constraints() {
        let grids: [(Family, &[f64]); 3] = [
            (Family::Gumbel, &[1.1, 1.5, 2.0, 3.0, 4.0]),
            (Family::Galambos, &[0.5, 0.75, 1.0, 1.5, 3.0]),
            (Family::HuslerReiss, &[0.5, 1.0, 2.0]),
        ];
        for (fam, thetas) in grids {
            for &th in thetas {
                let p = ParametricPickands::new(fam, th).unwrap();
                assert!(validate_pickands(&p).is_valid(1e-12), "{fam:?} {th}");
                assert!((p.eval(0.0).1 + 1.0).abs() < 1e-9 && (p.eval(1.0).1 - 1.0).abs() < 1e-9);
                for (a, b) in [(0.5, 1.0), (1.0, 0.5)] {
                    let k = ParametricPickands::with_asymmetry(fam, th, a, b).unwrap();
                    assert!(validate_pickands(&k).is_valid(1e-12));
                }
            }
        }
    }

    #[test]
    fn pickands_estimator_hand_values() {
        let e = (-1.0f64).exp();
        assert!((pickands_estimator(&[(e, e)], 0.5).unwrap() - 0.5).abs() < 1e-14);
        let s = [(e, (-2.0f64).exp()), ((-3.0f64).exp(), e)];
        assert!((pickands_estimator(&s, 0.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((pickands_estimator(&s, 1.0).unwrap() - 1.0 / 1.5).abs() < 1e-14);
        assert!(pickands_estimator(&[], 0.5).is_err());
    }

    #[test]
    fn convex_minorant_examples() {
        let t = [0.0, 0.25, 0.5, 1.0];
        let y = [1.0, 1.0, 0.9, 1.0];
        let g = greatest_convex_minorant(&t, &y);
        assert!((g[1] - 0.95).abs() < 1e-15);
        assert_eq!(g[2], 0.9);
        let t = linspace(0.0, 1.0, 11);
        let y: Vec<f64> = t.iter().map(|v| v * v).collect();
        assert_eq!(greatest_convex_minorant(&t, &y), y);
    }

    #[test]
    fn cfg_with_exact_uniform_cdf_is_independence() {
        let est = CfgEstimate::from_cdf(|z| z);
        for k in 0..=10 {
            assert_eq!(est.value(k as f64 / 10.0).unwrap(), 1.0);
        }
        assert!(est.value(1.5).is_err());
        let est = CfgEstimate::from_z(&[0.2, 0.4, 0.9]).unwrap();
        assert_eq!(est.value(0.0).unwrap(), 1.0);
        assert!(est.value(1.0).unwrap().is_finite());
    }
}

//! Williamson transforms of densities on `[0, 1]`.
//!
//! A density `f` with CDF `F` maps to the 2-monotone function
//! `W(x) = ∫_x^1 (1 − x/r) f(r) dr`, with `W'' = f/x` and `W(0⁺) = 1`.

use crate::error::{Error, Result};
use crate::interp::HermiteSpline;
use crate::roots::bisect;

/// A function on `[0, 1]` evaluated together with its first two derivatives.
pub trait WilliamsonFunction: Send + Sync {
    /// `(W, W', W'')` at `x`; at `x = 0` derivatives may be non-finite.
    fn eval(&self, x: f64) -> (f64, f64, f64);

    fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Node locations when the function is tabulated.
    fn nodes(&self) -> Option<&[f64]> {
        None
    }
}

/// `W(x) = (1 − x)^θ`, the transform of the Beta(2, θ − 1) density for θ > 1.
#[derive(Debug, Clone, Copy)]
pub struct PowerComplement {
    theta: f64,
}

pub fn w_power_complement(theta: f64) -> Result<PowerComplement> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("exponent must be non-negative, got {theta}")));
    }
    Ok(PowerComplement { theta })
}

impl WilliamsonFunction for PowerComplement {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let th = self.theta;
        if th == 0.0 {
            return (1.0, 0.0, 0.0);
        }
        let y = 1.0 - x;
        let d1 = if th == 1.0 { -1.0 } else { -th * y.powf(th - 1.0) };
        let d2 = match th {
            t if t == 1.0 => 0.0,
            t if t == 2.0 => 2.0,
            _ => th * (th - 1.0) * y.powf(th - 2.0),
        };
        (y.powf(th), d1, d2)
    }
}

/// Transform of the density of `U^θ` (U uniform).
#[derive(Debug, Clone, Copy)]
pub struct UniformPower {
    theta: f64,
}

pub fn w_uniform_power(theta: f64) -> Result<UniformPower> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("exponent must be positive, got {theta}")));
    }
    Ok(UniformPower { theta })
}

impl WilliamsonFunction for UniformPower {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let th = self.theta;
        if x <= 0.0 {
            let d2 = match th {
                t if t < 0.5 => 0.0,
                t if t == 0.5 => 2.0,
                _ => f64::INFINITY,
            };
            let d1 = if th >= 1.0 { f64::NEG_INFINITY } else { -1.0 / (1.0 - th) };
            return (1.0, d1, d2);
        }
        if th == 1.0 {
            let l = x.ln();
            return (1.0 - x + x * l, l, 1.0 / x);
        }
        let r = x.powf(1.0 / th);
        let w = 1.0 + x / (th - 1.0) - th * r / (th - 1.0);
        let d1 = (1.0 - r / x) / (th - 1.0);
        let d2 = r / (x * x * th);
        (w, d1, d2)
    }
}

/// Tabulated `(x, W, W', W'')` with a C² piecewise-quintic interpolant.
#[derive(Debug, Clone)]
pub struct WilliamsonGrid {
    x: Vec<f64>,
    w: Vec<f64>,
    wp: Vec<f64>,
    wpp: Vec<f64>,
    /// Accumulated tail probabilities `Σ_{k≥j} P_k`.
    tail: Vec<f64>,
    w0_estimate: f64,
    normalized: bool,
    spline: HermiteSpline,
}

impl WilliamsonGrid {
    /// Assembles a grid from node values. `w[0]` is forced to 1.
    pub fn from_nodes(
        x: Vec<f64>,
        mut w: Vec<f64>,
        wp: Vec<f64>,
        wpp: Vec<f64>,
        tail: Vec<f64>,
        w0_estimate: f64,
    ) -> Result<Self> {
        check_nodes(&x)?;
        let n = x.len();
        if w.len() != n || wp.len() != n || wpp.len() != n || tail.len() != n {
            return Err(Error::invalid("Williamson grid arrays differ in length"));
        }
        w[0] = 1.0;
        let spline = HermiteSpline::new(&x, &w, &wp, &wpp)?;
        Ok(Self { x, w, wp, wpp, tail, w0_estimate, normalized: false, spline })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn wp(&self) -> &[f64] {
        &self.wp
    }

    pub fn wpp(&self) -> &[f64] {
        &self.wpp
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// Estimate of `W(0⁺)` implied by the tabulated density (its Simpson mass).
    pub fn w0_estimate(&self) -> f64 {
        self.w0_estimate
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Largest violation of `W_j = F̂_j + x_j W'_j` over the nodes.
    pub fn survival_residual(&self) -> f64 {
        (1..self.x.len())
            .map(|j| (self.w[j] - (self.tail[j] + self.x[j] * self.wp[j])).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violations of (non-increasing W, non-decreasing W', W ≥ 0, W'' ≥ 0) at the nodes.
    pub fn monotonicity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 1..self.x.len() {
            worst = worst.max(self.w[j] - self.w[j - 1]);
            if self.wp[j - 1].is_finite() {
                worst = worst.max(self.wp[j - 1] - self.wp[j]);
            }
            worst = worst.max(-self.w[j]);
            if self.wpp[j].is_finite() {
                worst = worst.max(-self.wpp[j]);
            }
        }
        worst
    }
}

impl WilliamsonFunction for WilliamsonGrid {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            return (self.w[0], self.wp[0], self.wpp[0]);
        }
        self.spline.eval(x.min(1.0))
    }

    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.w[0];
        }
        self.spline.value(x.min(1.0))
    }

    fn nodes(&self) -> Option<&[f64]> {
        Some(&self.x)
    }
}

fn check_nodes(x: &[f64]) -> Result<()> {
    if x.len() < 2 || x[0] != 0.0 || *x.last().unwrap() != 1.0 {
        return Err(Error::invalid("Williamson nodes must run from 0 to 1"));
    }
    if x.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::invalid("Williamson nodes must be strictly increasing"));
    }
    Ok(())
}

/// Tabulates the Williamson transform of a density by backward Simpson recurrences.
///
/// With `P_j ≈ ∫ f` and `S_j ≈ ∫ f/r` over `[x_j, x_{j+1}]` (Simpson, one midpoint each):
/// `W'_j = W'_{j+1} − S_j` and `W_j = W_{j+1} + x_j W'_j − x_{j+1} W'_{j+1} + P_j`,
/// starting from `W = W' = 0` at `x = 1`. At `x = 0` the value is fixed to 1
/// and both derivatives are stored as non-finite sentinels.
pub fn williamson_from_density<F: Fn(f64) -> f64>(f: F, x: &[f64]) -> Result<WilliamsonGrid> {
    check_nodes(x)?;
    let m = x.len();
    let fx: Vec<f64> = x.iter().map(|&v| f(v)).collect();
    let mid: Vec<f64> = x.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let fm: Vec<f64> = mid.iter().map(|&v| f(v)).collect();
    if fx[1..].iter().chain(&fm).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("density must be finite and non-negative away from 0"));
    }
    let mut w = vec![0.0; m];
    let mut wp = vec![0.0; m];
    let mut wpp = vec![0.0; m];
    let mut tail = vec![0.0; m];
    wpp[m - 1] = fx[m - 1];
    for j in (1..m - 1).rev() {
        let h = x[j + 1] - x[j];
        let p = (fx[j] + 4.0 * fm[j] + fx[j + 1]) * h / 6.0;
        let s = (fx[j] / x[j] + 4.0 * fm[j] / mid[j] + fx[j + 1] / x[j + 1]) * h / 6.0;
        wp[j] = wp[j + 1] - s;
        w[j] = w[j + 1] + x[j] * wp[j] - x[j + 1] * wp[j + 1] + p;
        wpp[j] = fx[j] / x[j];
        tail[j] = tail[j + 1] + p;
    }
    // The first segment's mass; an infinite density at 0 falls back to the
    // midpoint rule.
    let p0 = if fx[0].is_finite() { (fx[0] + 4.0 * fm[0] + fx[1]) * x[1] / 6.0 } else { fm[0] * x[1] };
    tail[0] = tail[1] + p0;
    let w0_estimate = tail[0];
    w[0] = 1.0;
    wp[0] = f64::NEG_INFINITY;
    wpp[0] = f64::INFINITY;
    if m > 2 && w[1] > 1.2 {
        return Err(Error::numerical(format!(
            "Williamson recurrence diverged: W(x_1) = {} (refine the grid or normalize)",
            w[1]
        )));
    }
    WilliamsonGrid::from_nodes(x.to_vec(), w, wp, wpp, tail, w0_estimate)
}

/// Rescales a grid so that `W(0⁺) = 1`.
pub fn normalize_w(g: &WilliamsonGrid) -> Result<WilliamsonGrid> {
    let est = g.w0_estimate;
    if !(est > 0.5 && est < 2.0) {
        return Err(Error::numerical(format!("W(0+) estimate {est} outside (0.5, 2)")));
    }
    let scale = |v: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|a| a / est).collect();
        out[0] = v[0];
        out
    };
    let mut out = WilliamsonGrid::from_nodes(
        g.x.clone(),
        scale(&g.w),
        scale(&g.wp),
        scale(&g.wpp),
        g.tail.iter().map(|a| a / est).collect(),
        1.0,
    )?;
    out.normalized = true;
    Ok(out)
}

/// The unique `x*` with `W(x*) = x*` (equal to `A(½) − ½` after rotation).
pub fn fixed_point<W: WilliamsonFunction + ?Sized>(w: &W) -> Result<f64> {
    bisect(|x| w.value(x) - x, 0.0, 1.0, 1e-16, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::linspace;

    fn sqrt_w(x: f64) -> f64 {
        x - 2.0 * x.sqrt() + 1.0
    }

    #[test]
    fn uniform_power_closed_forms() {
        let w = w_uniform_power(1.0).unwrap();
        assert!((w.value(0.5) - (0.5 + 0.5 * 0.5f64.ln())).abs() < 1e-15);
        assert!((w.value(0.5) - 0.15343).abs() < 1e-5);
        let w2 = w_uniform_power(2.0).unwrap();
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert!((w2.value(x) - sqrt_w(x)).abs() < 1e-14);
        }
        for th in [0.5, 1.0, 2.0, 4.0] {
            let w = w_uniform_power(th).unwrap();
            assert!((w.value(0.0) - 1.0).abs() < 1e-15);
            assert!(w.value(1.0).abs() < 1e-14);
            for k in 1..20 {
                let x = k as f64 / 20.0;
                let h = 1e-5;
                let (_, d1, d2) = w.eval(x);
                let fd1 = (w.value(x + h) - w.value(x - h)) / (2.0 * h);
                let fd2 = (w.eval(x + h).1 - w.eval(x - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0));
                assert!((d2 - fd2).abs() < 1e-5 * d2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn power_complement_cases() {
        let w1 = w_power_complement(1.0).unwrap();
        assert_eq!(w1.eval(0.3), (0.7, -1.0, 0.0));
        // θ = 2: W'' = f/x = 2 means f(x) = 2x
        let w2 = w_power_complement(2.0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((w2.eval(x).2 * x - 2.0 * x).abs() < 1e-14);
        }
        let w0 = w_power_complement(0.0).unwrap();
        assert_eq!(w0.value(0.7), 1.0);
        assert!(w_power_complement(-1.0).is_err());
    }

    #[test]
    fn recurrence_reproduces_root_transform() {
        // density of U² is 1/(2√x); graded nodes tame the singularity at 0
        let x: Vec<f64> = linspace(0.0, 1.0, 200).iter().map(|s| s * s).collect();
        let g = williamson_from_density(|r: f64| 0.5 / r.sqrt(), &x).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let v = k as f64 / 1000.0;
            worst = worst.max((g.value(v) - sqrt_w(v)).abs());
        }
        assert!(worst <= 2e-3, "sup error {worst}");
        assert!(g.w()[1] <= g.w()[0]);
        assert!(g.monotonicity_violation() <= 0.0);
        assert!(g.survival_residual() <= 1e-12);
    }

    #[test]
    fn recurrence_for_uniform_density() {
        let x = linspace(0.0, 1.0, 201);
        let g = williamson_from_density(|_| 1.0, &x).unwrap();
        assert!((g.value(0.5) - 0.15343).abs() < 2e-3);
        assert!((g.w0_estimate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_rescales_grid() {
        let x = linspace(0.0, 1.0, 101);
        let g = williamson_from_density(|_| 1.0, &x).unwrap();
        let same = normalize_w(&g).unwrap();
        for j in 0..x.len() {
            assert!((same.w()[j] - g.w()[j]).abs() <= 1e-12);
        }
        let scaled = |v: &[f64]| -> Vec<f64> { v.iter().map(|a| a * 1.05).collect() };
        let big = WilliamsonGrid::from_nodes(
            x.clone(),
            scaled(g.w()),
            scaled(g.wp()),
            scaled(g.wpp()),
            scaled(g.tail()),
            1.05,
        )
        .unwrap();
        let back = normalize_w(&big).unwrap();
        assert!(back.is_normalized());
        for j in 1..x.len() {
            assert!((back.w()[j] - g.w()[j]).abs() <= 1e-10);
            assert!((back.wp()[j] - g.wp()[j]).abs() <= 1e-10);
        }
        let broken = WilliamsonGrid::from_nodes(x, g.w().to_vec(), g.wp().to_vec(), g.wpp().to_vec(), g.tail().to_vec(), 3.0).unwrap();
        assert!(normalize_w(&broken).is_err());
    }

    #[test]
    fn fixed_points() {
        let x = fixed_point(&w_uniform_power(2.0).unwrap()).unwrap();
        assert!((x - 0.25).abs() < 1e-10);
        let x = fixed_point(&w_power_complement(1.0).unwrap()).unwrap();
        assert!((x - 0.5).abs() < 1e-10);
        let beta = 2f64.sqrt() - 1.0;
        assert!((0.5 * (1.0 - (1.0 + beta).log2()) - 0.25).abs() < 1e-12);
    }
}

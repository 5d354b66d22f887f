//! Penalized log-likelihood of the interpolated `h` density and its gradient.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bayes::MAX_LOG_DENSITY;
use crate::error::{Error, Result};
use crate::pipeline::refined_nodes;
use crate::quadrature::trapezoid_weights;
use crate::splinebasis::ZBasis;

/// Floor applied to `ĥ` before taking logarithms.
pub const H_FLOOR: f64 = 1e-12;

/// Tolerated negative undershoot of `h` at the interpolation nodes.
pub const H_NEGATIVE_TOL: f64 = 1e-6;

/// Piecewise-linear density on `[0, 1]` through `(t_i, h_i)`, normalized by
/// the trapezoidal rule on the same nodes.
#[derive(Debug, Clone)]
pub struct HHat {
    t: Vec<f64>,
    h: Vec<f64>,
}

impl HHat {
    /// Normalizes `h` so that its trapezoidal integral over `t` is 1.
    pub fn new(t: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if t.len() != h.len() || t.len() < 2 || t.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("h nodes must be strictly increasing"));
        }
        let mass: f64 = t.windows(2).zip(h.windows(2)).map(|(s, v)| 0.5 * (v[0] + v[1]) * (s[1] - s[0])).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::numerical(format!("h has non-positive mass {mass}")));
        }
        let h = h.into_iter().map(|v| v / mass).collect();
        Ok(Self { t, h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.t.len();
        if z < self.t[0] || z > self.t[n - 1] {
            return 0.0;
        }
        let i = self.t.partition_point(|&v| v <= z).clamp(1, n - 1) - 1;
        let lam = (z - self.t[i]) / (self.t[i + 1] - self.t[i]);
        (1.0 - lam) * self.h[i] + lam * self.h[i + 1]
    }
}

/// Quantities of one forward evaluation at the interior grid nodes.
struct Forward {
    e: Vec<f64>,
    f: Vec<f64>,
    norm: f64,
    wp: Vec<f64>,
    wpp: Vec<f64>,
    t: Vec<f64>,
    a: Vec<f64>,
    ap: Vec<f64>,
    app: Vec<f64>,
    h: Vec<f64>,
    mass: f64,
}

/// `θ ↦ Σ log ĥ_θ(z_i) − λ θᵀΩθ` on a fixed x-grid and sample.
///
/// The Williamson transform is tabulated by trapezoidal recurrences on a
/// refinement of the x-grid, so the value and its gradient are exact for the
/// discretized model.
#[derive(Debug, Clone)]
pub struct Objective {
    basis: Arc<ZBasis>,
    center: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    design: Vec<Vec<f64>>,
    grid_index: Vec<usize>,
    omega: DMatrix<f64>,
    lambda: f64,
    z: Vec<f64>,
}

impl Objective {
    /// `x_grid` runs from 0 to 1; its interior nodes become the `ĥ` nodes.
    pub fn new(
        basis: Arc<ZBasis>,
        x_grid: &[f64],
        z: &[f64],
        lambda: f64,
        center: bool,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid("penalty must be non-negative"));
        }
        let k = x_grid.len();
        if k < 4 || x_grid[0] != 0.0 || x_grid[k - 1] != 1.0 || x_grid.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("x-grid must increase strictly from 0 to 1 with two interior nodes"));
        }
        if z.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::invalid("z sample must lie in (0, 1)"));
        }
        let nodes = refined_nodes(x_grid);
        let grid_index = x_grid[1..k - 1]
            .iter()
            .map(|x| nodes.binary_search_by(|v| v.total_cmp(x)).expect("anchor kept"))
            .collect();
        let weights = trapezoid_weights(&nodes);
        let design = basis.design(&nodes, 0);
        let center = if center { basis.project_center() } else { vec![0.0; basis.dim()] };
        let omega = basis.curvature_matrix();
        let mut z = z.to_vec();
        z.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { basis, center, nodes, weights, design, grid_index, omega, lambda, z })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Arc<ZBasis> {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `θᵀΩθ`.
    pub fn curvature(&self, theta: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(theta);
        (v.transpose() * &self.omega * &v)[(0, 0)]
    }

    fn forward(&self, theta: &[f64]) -> Result<Forward> {
        if theta.len() != self.dim() {
            return Err(Error::invalid(format!("expected {} coefficients", self.dim())));
        }
        let c: Vec<f64> = theta.iter().zip(&self.center).map(|(a, b)| a + b).collect();
        let m = self.nodes.len();
        let mut e = Vec::with_capacity(m);
        for row in &self.design {
            let p: f64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
            if !(p.abs() <= MAX_LOG_DENSITY) {
                return Err(Error::numerical(format!("log-density {p} overflows")));
            }
            e.push(p.exp());
        }
        let norm: f64 = e.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        let f: Vec<f64> = e.iter().map(|v| v / norm).collect();

        let y = &self.nodes;
        let k = self.grid_index.len();
        let (mut w, mut wp, mut wpp) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        let mut s_acc = 0.0;
        let mut p_acc = 0.0;
        let mut next = k;
        for j in (1..m - 1).rev() {
            let d = y[j + 1] - y[j];
            p_acc += 0.5 * (f[j] + f[j + 1]) * d;
            s_acc += 0.5 * (f[j] / y[j] + f[j + 1] / y[j + 1]) * d;
            if next > 0 && self.grid_index[next - 1] == j {
                next -= 1;
                wp[next] = -s_acc;
                w[next] = y[j] * wp[next] + p_acc;
                wpp[next] = f[j] / y[j];
            }
        }

        let (mut t, mut a, mut ap, mut app, mut h) =
            (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for i in 0..k {
            let x = y[self.grid_index[i]];
            let d = 1.0 - wp[i];
            t[i] = 0.5 * (1.0 + x - w[i]);
            a[i] = 0.5 * (1.0 + x + w[i]);
            ap[i] = (1.0 + wp[i]) / d;
            app[i] = 4.0 * wpp[i] / (d * d * d);
            let r = ap[i] / a[i];
            let ti = t[i];
            h[i] = 1.0 + (1.0 - 2.0 * ti) * r + ti * (1.0 - ti) * (app[i] / a[i] - r * r);
            if !h[i].is_finite() || h[i] < -H_NEGATIVE_TOL {
                return Err(Error::numerical(format!("h = {} at t = {ti}", h[i])));
            }
        }
        let mut prev_t = 0.0;
        for &ti in &t {
            if !(ti > prev_t) {
                return Err(Error::numerical("rotated grid is not increasing"));
            }
            prev_t = ti;
        }
        if !(prev_t < 1.0) {
            return Err(Error::numerical("rotated grid is not increasing"));
        }
        let mut mass = 0.0;
        for i in 0..=k {
            let (t0, h0) = if i == 0 { (0.0, 0.0) } else { (t[i - 1], h[i - 1]) };
            let (t1, h1) = if i == k { (1.0, 0.0) } else { (t[i], h[i]) };
            mass += 0.5 * (h0 + h1) * (t1 - t0);
        }
        if !(mass > 0.0) {
            return Err(Error::numerical("h has non-positive mass"));
        }
        Ok(Forward { e, f, norm, wp, wpp, t, a, ap, app, h, mass })
    }

    /// The interpolated density `ĥ_θ`.
    pub fn h_hat(&self, theta: &[f64]) -> Result<HHat> {
        let fw = self.forward(theta)?;
        let mut t = vec![0.0];
        t.extend_from_slice(&fw.t);
        t.push(1.0);
        let mut h = vec![0.0];
        h.extend_from_slice(&fw.h);
        h.push(0.0);
        HHat::new(t, h)
    }

    /// Log-likelihood `Σ log ĥ(z_i)` without the penalty.
    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        let fw = self.forward(theta)?;
        Ok(self.loglik_and_adjoint(&fw, None))
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        let v = self.loglik(theta)? - self.lambda * self.curvature(theta);
        if !v.is_finite() {
            return Err(Error::numerical("non-finite objective"));
        }
        Ok(v)
    }

    /// Sample term of the log-likelihood; accumulates `∂/∂h_i` and `∂/∂t_i`
    /// (interior nodes) when `adj` is given.
    fn loglik_and_adjoint(&self, fw: &Forward, mut adj: Option<(&mut [f64], &mut [f64])>) -> f64 {
        let k = fw.t.len();
        let node = |i: usize| -> (f64, f64) {
            match i {
                0 => (0.0, 0.0),
                _ if i == k + 1 => (1.0, 0.0),
                _ => (fw.t[i - 1], fw.h[i - 1]),
            }
        };
        let mut ll = 0.0;
        let mut used = 0.0;
        let mut i = 0;
        for &z in &self.z {
            while i < k && node(i + 1).0 <= z {
                i += 1;
            }
            let (t0, h0) = node(i);
            let (t1, h1) = node(i + 1);
            let dt = t1 - t0;
            let lam = (z - t0) / dt;
            let raw = (1.0 - lam) * h0 + lam * h1;
            let val = raw / fw.mass;
            if val > H_FLOOR {
                ll += val.ln();
                used += 1.0;
                if let Some((hb, tb)) = adj.as_mut() {
                    let g = 1.0 / raw;
                    let dh = h1 - h0;
                    if i >= 1 {
                        hb[i - 1] += g * (1.0 - lam);
                        tb[i - 1] += g * dh * (lam - 1.0) / dt;
                    }
                    if i + 1 <= k {
                        hb[i] += g * lam;
                        tb[i] += g * dh * (-lam) / dt;
                    }
                }
            } else {
                ll += H_FLOOR.ln();
            }
        }
        if let Some((hb, tb)) = adj {
            let mass_bar = -used / fw.mass;
            for j in 0..k {
                let (tm, hm) = node(j);
                let (tq, hq) = node(j + 2);
                hb[j] += mass_bar * 0.5 * (tq - tm);
                tb[j] += mass_bar * 0.5 * (hm - hq);
            }
        }
        ll
    }

    /// Objective value and its gradient with respect to `θ`.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let fw = self.forward(theta)?;
        let k = fw.t.len();
        let mut hb = vec![0.0; k];
        let mut tb = vec![0.0; k];
        let ll = self.loglik_and_adjoint(&fw, Some((&mut hb, &mut tb)));

        let y = &self.nodes;
        let m = y.len();
        let mut wb = vec![0.0; k];
        let mut wpb = vec![0.0; k];
        let mut fb = vec![0.0; m];
        for i in 0..k {
            let (ti, a, ap, app) = (fw.t[i], fw.a[i], fw.ap[i], fw.app[i]);
            let r = ap / a;
            let q = ti * (1.0 - ti);
            let dh_dt = -2.0 * r + (1.0 - 2.0 * ti) * (app / a - r * r);
            let dh_dr = (1.0 - 2.0 * ti) - 2.0 * q * r;
            let t_bar = tb[i] + hb[i] * dh_dt;
            let a_bar = hb[i] * (-q * app / (a * a) - dh_dr * ap / (a * a));
            let ap_bar = hb[i] * dh_dr / a;
            let app_bar = hb[i] * q / a;
            let d = 1.0 - fw.wp[i];
            wb[i] = -0.5 * t_bar + 0.5 * a_bar;
            wpb[i] = ap_bar * 2.0 / (d * d) + app_bar * 12.0 * fw.wpp[i] / (d * d * d * d);
            let wpp_bar = app_bar * 4.0 / (d * d * d);
            let g = self.grid_index[i];
            fb[g] += wpp_bar / y[g];
            // W = x W' + T.
            wpb[i] += y[g] * wb[i];
        }
        // Segment sums feed every grid node at or left of them.
        let mut s_bar = 0.0;
        let mut p_bar = 0.0;
        let mut next = 0;
        for j in 1..m - 1 {
            while next < k && self.grid_index[next] <= j {
                s_bar -= wpb[next];
                p_bar += wb[next];
                next += 1;
            }
            let d = y[j + 1] - y[j];
            fb[j] += 0.5 * d * (p_bar + s_bar / y[j]);
            fb[j + 1] += 0.5 * d * (p_bar + s_bar / y[j + 1]);
        }
        let norm_bar: f64 = -fb.iter().zip(&fw.f).map(|(a, b)| a * b).sum::<f64>() / fw.norm;
        let mut grad = vec![0.0; self.dim()];
        for j in 0..m {
            let e_bar = fb[j] / fw.norm + norm_bar * self.weights[j];
            let p_bar = e_bar * fw.e[j];
            for (g, b) in grad.iter_mut().zip(&self.design[j]) {
                *g += p_bar * b;
            }
        }
        let v = nalgebra::DVector::from_column_slice(theta);
        let pen = &self.omega * &v;
        for (g, p) in grad.iter_mut().zip(pen.iter()) {
            *g -= 2.0 * self.lambda * p;
        }
        let value = ll - self.lambda * self.curvature(theta);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numerical("non-finite objective or gradient"));
        }
        Ok((value, grad))
    }
}

/// Builds `ĥ_θ` on the given x-grid.
pub fn build_h_hat(basis: Arc<ZBasis>, theta: &[f64], x_grid: &[f64], center: bool) -> Result<HHat> {
    Objective::new(basis, x_grid, &[], 0.0, center)?.h_hat(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::linspace;
    use crate::splinebasis::KnotConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(lambda: f64, center: bool) -> Objective {
        let basis = Arc::new(ZBasis::new(KnotConfig::uniform(6, 3)).unwrap());
        let q = linspace(0.0, 1.0, 30);
        let x: Vec<f64> = q.iter().map(|v| v * v).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..300).map(|_| rng.random_range(0.02..0.98)).collect();
        Objective::new(basis, &x, &z, lambda, center).unwrap()
    }

    #[test]
    fn h_hat_integrates_to_one() {
        let obj = setup(0.0, true);
        let hh = obj.h_hat(&[0.1, -0.2, 0.05, 0.0, 0.1, 0.0, -0.1, 0.0, 0.0]).unwrap();
        let mass: f64 = hh
            .nodes()
            .windows(2)
            .zip(hh.values().windows(2))
            .map(|(t, h)| 0.5 * (h[0] + h[1]) * (t[1] - t[0]))
            .sum();
        assert!((mass - 1.0).abs() < 1e-14);
        assert_eq!(hh.values()[0], 0.0);
    }

    #[test]
    fn penalty_reduces_value() {
        let theta = [0.3, -0.2, 0.1, 0.0, 0.2, 0.1, -0.1, 0.0, 0.05];
        let a = setup(1e-3, true).value(&theta).unwrap();
        let b = setup(2e-3, true).value(&theta).unwrap();
        assert!(b < a);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (lambda, center) in [(0.0, true), (1e-3, true), (1e-2, false)] {
            let obj = setup(lambda, center);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..3 {
                let theta: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-0.3..0.3)).collect();
                let (_, g) = obj.value_and_gradient(&theta).unwrap();
                for i in 0..obj.dim() {
                    let step = 1e-6 * theta[i].abs().max(1.0);
                    let mut p = theta.clone();
                    p[i] += step;
                    let mut q = theta.clone();
                    q[i] -= step;
                    let fd = (obj.value(&p).unwrap() - obj.value(&q).unwrap()) / (2.0 * step);
                    let rel = (g[i] - fd).abs() / fd.abs().max(1.0);
                    assert!(rel < 1e-4, "i={i} analytic {} fd {fd}", g[i]);
                }
            }
        }
    }
}

//! Pickands dependence functions and the affine rotation linking them to
//! Williamson transforms.
//!
//! The rotation maps `x ∈ [0, 1]` to `t(x) = (1 + x − W(x)) / 2` and sets
//! `A(t(x)) = (1 + x + W(x)) / 2`. The inverse is `x(t) = t + A(t) − 1`,
//! `W(x(t)) = A(t) − t`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::HermiteSpline;
use crate::quadrature::{geometric_nodes, integrate_unit, linspace, sorted_unique, trapezoid};
use crate::roots::brent;
use crate::williamson::WilliamsonFunction;

/// A Pickands function evaluated together with its first two derivatives.
pub trait PickandsFunction: Send + Sync {
    /// `(A, A', A'')` at `t ∈ [0, 1]`; endpoint second derivatives may be non-finite.
    fn eval(&self, t: f64) -> (f64, f64, f64);

    fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// True only for the independence function `A ≡ 1`.
    fn is_independence(&self) -> bool {
        false
    }
}

impl<P: PickandsFunction + ?Sized> PickandsFunction for Arc<P> {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        (**self).eval(t)
    }

    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }

    fn is_independence(&self) -> bool {
        (**self).is_independence()
    }
}

impl<P: PickandsFunction + ?Sized> PickandsFunction for &P {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        (**self).eval(t)
    }

    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }

    fn is_independence(&self) -> bool {
        (**self).is_independence()
    }
}

/// `A ≡ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Independence;

impl PickandsFunction for Independence {
    fn eval(&self, _t: f64) -> (f64, f64, f64) {
        (1.0, 0.0, 0.0)
    }

    fn is_independence(&self) -> bool {
        true
    }
}

/// `A(t) = max{t, 1 − t}`; not twice differentiable at `t = ½`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectDependence;

impl PickandsFunction for PerfectDependence {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t < 0.5 {
            (1.0 - t, -1.0, 0.0)
        } else {
            (t, 1.0, 0.0)
        }
    }
}

type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Pickands-like function given by closures for the value and derivatives.
#[derive(Clone)]
pub struct PickandsFn {
    a: Curve,
    a1: Curve,
    a2: Curve,
}

impl PickandsFn {
    pub fn new<A, B, C>(a: A, a1: B, a2: C) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { a: Arc::new(a), a1: Arc::new(a1), a2: Arc::new(a2) }
    }
}

impl PickandsFunction for PickandsFn {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        ((self.a)(t), (self.a1)(t), (self.a2)(t))
    }

    fn value(&self, t: f64) -> f64 {
        (self.a)(t)
    }
}

/// Tabulated `(t, A, A', A'')` with a C² piecewise-quintic interpolant.
#[derive(Debug, Clone)]
pub struct PickandsModel {
    t: Vec<f64>,
    a: Vec<f64>,
    ap: Vec<f64>,
    app: Vec<f64>,
    spline: HermiteSpline,
}

impl PickandsModel {
    pub fn from_nodes(t: Vec<f64>, a: Vec<f64>, ap: Vec<f64>, app: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t[0] != 0.0 || *t.last().unwrap() != 1.0 {
            return Err(Error::invalid("Pickands nodes must run from 0 to 1"));
        }
        let spline = HermiteSpline::new(&t, &a, &ap, &app)?;
        Ok(Self { t, a, ap, app, spline })
    }

    /// Tabulates any Pickands function on the given nodes.
    pub fn tabulate<P: PickandsFunction + ?Sized>(p: &P, t_nodes: &[f64]) -> Result<Self> {
        let n = t_nodes.len();
        let (mut a, mut ap, mut app) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &t in t_nodes {
            let (v, d1, d2) = p.eval(t);
            a.push(v);
            ap.push(d1);
            app.push(d2);
        }
        Self::from_nodes(t_nodes.to_vec(), a, ap, app)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn ap(&self) -> &[f64] {
        &self.ap
    }

    pub fn app(&self) -> &[f64] {
        &self.app
    }

    /// `t ↦ A(1 − t)`, computed exactly on the reflected nodes.
    pub fn mirrored(&self) -> Self {
        let t: Vec<f64> = self.t.iter().rev().map(|v| 1.0 - v).collect();
        let a: Vec<f64> = self.a.iter().rev().copied().collect();
        let ap: Vec<f64> = self.ap.iter().rev().map(|v| -v).collect();
        let app: Vec<f64> = self.app.iter().rev().copied().collect();
        Self::from_nodes(t, a, ap, app).expect("reflected nodes stay valid")
    }

    /// `t ↦ (A(t) + A(1 − t)) / 2` tabulated on the symmetric closure of the nodes.
    pub fn symmetrized(&self) -> Self {
        let mut nodes = self.t.clone();
        nodes.extend(self.t.iter().map(|v| 1.0 - v));
        let nodes = sorted_unique(nodes, 1e-13);
        let sym = Symmetrized::new(self.clone());
        Self::tabulate(&sym, &nodes).expect("symmetric nodes stay valid")
    }
}

impl PickandsFunction for PickandsModel {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let last = self.t.len() - 1;
        if t <= 0.0 {
            return (self.a[0], self.ap[0], self.app[0]);
        }
        if t >= 1.0 {
            return (self.a[last], self.ap[last], self.app[last]);
        }
        self.spline.eval(t)
    }

    fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.a[0];
        }
        if t >= 1.0 {
            return self.a[self.a.len() - 1];
        }
        self.spline.value(t)
    }
}

/// Default `t` nodes: 401 equispaced nodes plus geometric refinement towards both endpoints.
pub fn default_t_nodes() -> Vec<f64> {
    let near = geometric_nodes(1e-8, 0.02, 1.2);
    let mut nodes = linspace(0.0, 1.0, 401);
    nodes.extend(near.iter().map(|v| 1.0 - v));
    nodes.extend(near);
    sorted_unique(nodes, 1e-13)
}

/// Rotates a Williamson transform into a Pickands function tabulated on `t_nodes`.
///
/// Interior nodes solve `(1 + x − W(x)) / 2 = t_i` for `x` by Brent's method.
/// Endpoint derivatives come from `W'(0⁺)`, `W''(0⁺)` and `W'(1)`, `W''(1)`;
/// a non-finite `W'(0⁺)` gives `A'(0) = −1` and a non-finite `A''(0)`.
pub fn rotate<W: WilliamsonFunction + ?Sized>(w: &W, t_nodes: &[f64]) -> Result<PickandsModel> {
    let n = t_nodes.len();
    if n < 2 || t_nodes[0] != 0.0 || t_nodes[n - 1] != 1.0 || t_nodes.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::invalid("rotation nodes must increase strictly from 0 to 1"));
    }
    let (w0, wp0, wpp0) = w.eval(0.0);
    let (w1, wp1, wpp1) = w.eval(1.0);
    if (w0 - 1.0).abs() > 1e-9 || w1.abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "W must satisfy W(0) = 1 and W(1) = 0, got {w0} and {w1}"
        )));
    }
    // Coarse bracketing table: the grid nodes when tabulated, otherwise a fixed grid.
    let x_table: Vec<f64> = match w.nodes() {
        Some(nodes) => nodes.to_vec(),
        None => {
            let mut v = linspace(0.0, 1.0, 257);
            v.extend(geometric_nodes(1e-12, 1.0 / 256.0, 2.0));
            sorted_unique(v, 0.0)
        }
    };
    let t_table: Vec<f64> = x_table.iter().map(|&x| 0.5 * (1.0 + x - w.value(x))).collect();

    let mut a = Vec::with_capacity(n);
    let mut ap = Vec::with_capacity(n);
    let mut app = Vec::with_capacity(n);
    a.push(1.0);
    if wp0.is_finite() {
        let d = 1.0 - wp0;
        ap.push((1.0 + wp0) / d);
        app.push(if wpp0.is_finite() { 4.0 * wpp0 / (d * d * d) } else { f64::INFINITY });
    } else {
        ap.push(-1.0);
        app.push(f64::INFINITY);
    }
    for &ti in &t_nodes[1..n - 1] {
        let k = t_table.partition_point(|&v| v <= ti);
        let (lo, hi) = if k == 0 {
            (0, 1)
        } else if k >= t_table.len() {
            (t_table.len() - 2, t_table.len() - 1)
        } else {
            (k - 1, k)
        };
        let g = |x: f64| 0.5 * (1.0 + x - w.value(x)) - ti;
        let x = brent(g, x_table[lo], x_table[hi], t_table[lo] - ti, t_table[hi] - ti, 1e-14, 200)
            .or_else(|_| brent(g, 0.0, 1.0, -ti, 1.0 - ti, 1e-14, 400))
            .map_err(|e| Error::numerical(format!("rotation failed at t = {ti}: {e}")))?;
        let (wv, wd, wdd) = w.eval(x);
        let d = 1.0 - wd;
        a.push(0.5 * (1.0 + x + wv));
        ap.push((1.0 + wd) / d);
        app.push(4.0 * wdd / (d * d * d));
    }
    let d1 = 1.0 - wp1;
    a.push(1.0);
    ap.push((1.0 + wp1) / d1);
    app.push(4.0 * wpp1 / (d1 * d1 * d1));
    PickandsModel::from_nodes(t_nodes.to_vec(), a, ap, app)
}

/// The Williamson transform `W(x(t)) = A(t) − t` of a Pickands function.
#[derive(Clone)]
pub struct InverseRotation<P> {
    a: P,
}

/// Inverts the rotation; rejects functions touching `1 − t` on `(0, ½]`.
pub fn rotate_inverse<P: PickandsFunction>(a: P) -> Result<InverseRotation<P>> {
    for k in 1..=500 {
        let t = k as f64 / 1000.0;
        if !(a.value(t) - (1.0 - t) > 1e-14) {
            return Err(Error::invalid(format!(
                "Pickands function touches the support line 1 - t at t = {t}"
            )));
        }
    }
    Ok(InverseRotation { a })
}

impl<P: PickandsFunction> InverseRotation<P> {
    /// The `t` with `t + A(t) − 1 = x`.
    pub fn t_of_x(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let g = |t: f64| t + self.a.value(t) - 1.0 - x;
        brent(g, 0.0, 1.0, -x, 1.0 - x, 1e-16, 400).unwrap_or_else(|_| {
            crate::roots::bisect(g, 0.0, 1.0, 1e-16, 0.0).unwrap_or(0.5)
        })
    }
}

impl<P: PickandsFunction> WilliamsonFunction for InverseRotation<P> {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            let (_, a1, a2) = self.a.eval(0.0);
            let s = 1.0 + a1;
            if s <= 1e-15 {
                return (1.0, f64::NEG_INFINITY, f64::INFINITY);
            }
            return (1.0, (a1 - 1.0) / s, 2.0 * a2 / (s * s * s));
        }
        let t = self.t_of_x(x);
        let (a, a1, a2) = self.a.eval(t);
        let s = 1.0 + a1;
        (a - t, (a1 - 1.0) / s, 2.0 * a2 / (s * s * s))
    }

    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let t = self.t_of_x(x);
        self.a.value(t) - t
    }
}

/// Density of `Z = log U / log(UV)` under the copula with Pickands function `a`.
///
/// At the endpoints the `z(1 − z) A''` term is dropped (it vanishes whenever
/// `A''` is finite), so `h(0) = 1 + A'(0)` and `h(1) = 1 − A'(1)`.
pub fn h_density<P: PickandsFunction + ?Sized>(a: &P, z: f64) -> f64 {
    let (v, d1, d2) = a.eval(z.clamp(0.0, 1.0));
    if z <= 0.0 {
        return 1.0 + d1 / v;
    }
    if z >= 1.0 {
        return 1.0 - d1 / v;
    }
    let r = d1 / v;
    1.0 + (1.0 - 2.0 * z) * r + z * (1.0 - z) * (d2 / v - r * r)
}

/// Spectral measure: a density on `(0, 1)` plus point masses at both ends.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub z: Vec<f64>,
    pub eta: Vec<f64>,
    pub h0: f64,
    pub h1: f64,
}

impl SpectralMeasure {
    /// `∫ z η(z) dz + H₁`, equal to 1 for a valid measure.
    pub fn first_moment(&self) -> f64 {
        let zeta: Vec<f64> = self
            .z
            .iter()
            .zip(&self.eta)
            .map(|(&z, &e)| if z == 0.0 { 0.0 } else { z * e })
            .collect();
        trapezoid(&self.z, &zeta) + self.h1
    }
}

/// Spectral measure induced by a Williamson transform, tabulated at `x_nodes`.
pub fn spectral_from_w<W: WilliamsonFunction + ?Sized>(w: &W, x_nodes: &[f64]) -> SpectralMeasure {
    let (_, wp0, _) = w.eval(0.0);
    let (_, wp1, _) = w.eval(1.0);
    let h0 = if wp0.is_finite() { 2.0 / (1.0 - wp0) } else { 0.0 };
    let h1 = -2.0 * wp1 / (1.0 - wp1);
    let mut z = Vec::with_capacity(x_nodes.len());
    let mut eta = Vec::with_capacity(x_nodes.len());
    for &x in x_nodes {
        let (wv, wd, wdd) = w.eval(x);
        let e = 4.0 * wdd / (1.0 - wd).powi(3);
        z.push(0.5 * (1.0 + x - wv));
        eta.push(e);
    }
    // continuous extension at the left end when the limit is indeterminate
    if let Some(first) = eta.first().copied() {
        if !first.is_finite() && eta.len() > 1 {
            eta[0] = eta[1];
        }
    }
    SpectralMeasure { z, eta, h0, h1 }
}

/// `4 (1 − ∫ A)`.
pub fn gini_from_pickands<P: PickandsFunction + ?Sized>(a: &P) -> f64 {
    4.0 * (1.0 - integrate_unit(|t| a.value(t)))
}

/// `1 − E[X]` for `X` with density `f` on `[0, 1]`.
pub fn gini_from_density<F: Fn(f64) -> f64>(f: F) -> f64 {
    1.0 - integrate_unit(|x| x * f(x))
}

/// Blomqvist's beta `4^{1 − A(½)} − 1`.
pub fn blomqvist_beta<P: PickandsFunction + ?Sized>(a: &P) -> f64 {
    4f64.powf(1.0 - a.value(0.5)) - 1.0
}

/// Upper-tail dependence coefficient `2 (1 − A(½))`.
pub fn upper_tail<P: PickandsFunction + ?Sized>(a: &P) -> f64 {
    2.0 * (1.0 - a.value(0.5))
}

/// Asymmetric extension `A_{α,β}` of a Pickands function.
#[derive(Debug, Clone, Copy)]
pub struct Khoudraji<P> {
    inner: P,
    alpha: f64,
    beta: f64,
}

pub fn khoudraji<P: PickandsFunction>(a: P, alpha: f64, beta: f64) -> Result<Khoudraji<P>> {
    if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!(
            "asymmetry parameters must lie in (0, 1], got ({alpha}, {beta})"
        )));
    }
    Ok(Khoudraji { inner: a, alpha, beta })
}

impl<P> Khoudraji<P> {
    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn params(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }
}

impl<P: PickandsFunction> PickandsFunction for Khoudraji<P> {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (al, be) = (self.alpha, self.beta);
        let s = (1.0 - t) * al + t * be;
        let u = (t * be / s).clamp(0.0, 1.0);
        let (a, a1, a2) = self.inner.eval(u);
        let v = (1.0 - t) * (1.0 - al) + t * (1.0 - be) + s * a;
        let d1 = al - be + (be - al) * a + al * be / s * a1;
        let d2 = if a2 == 0.0 { 0.0 } else { (al * be).powi(2) / (s * s * s) * a2 };
        (v, d1, d2)
    }

    fn is_independence(&self) -> bool {
        self.inner.is_independence()
    }
}

/// `t ↦ A(1 − t)`.
#[derive(Debug, Clone)]
pub struct Mirror<P>(pub P);

pub fn mirror<P: PickandsFunction>(a: P) -> Mirror<P> {
    Mirror(a)
}

impl<P: PickandsFunction> PickandsFunction for Mirror<P> {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (a, a1, a2) = self.0.eval(1.0 - t);
        (a, -a1, a2)
    }

    fn value(&self, t: f64) -> f64 {
        self.0.value(1.0 - t)
    }

    fn is_independence(&self) -> bool {
        self.0.is_independence()
    }
}

/// `t ↦ (A(t) + A(1 − t)) / 2`.
#[derive(Debug, Clone)]
pub struct Symmetrized<P>(P);

impl<P: PickandsFunction> Symmetrized<P> {
    pub fn new(a: P) -> Self {
        Symmetrized(a)
    }
}

pub fn symmetrize<P: PickandsFunction>(a: P) -> Symmetrized<P> {
    Symmetrized(a)
}

impl<P: PickandsFunction> PickandsFunction for Symmetrized<P> {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (a, a1, a2) = self.0.eval(t);
        let (b, b1, b2) = self.0.eval(1.0 - t);
        (0.5 * (a + b), 0.5 * (a1 - b1), 0.5 * (a2 + b2))
    }

    fn value(&self, t: f64) -> f64 {
        0.5 * (self.0.value(t) + self.0.value(1.0 - t))
    }

    fn is_independence(&self) -> bool {
        self.0.is_independence()
    }
}

/// Constraint diagnostics of a Pickands function on 1001 equispaced probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickandsDiagnostics {
    /// Largest excess of `max{t, 1 − t} − A` or `A − 1`.
    pub max_bound_violation: f64,
    /// Largest negative raw second difference `A(t−h) − 2A(t) + A(t+h)`.
    pub max_convexity_violation: f64,
    pub a_at_0: f64,
    pub a_at_1: f64,
}

impl PickandsDiagnostics {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.max_bound_violation <= tol
            && self.max_convexity_violation <= tol
            && (self.a_at_0 - 1.0).abs() <= tol
            && (self.a_at_1 - 1.0).abs() <= tol
    }
}

pub fn validate_pickands<P: PickandsFunction + ?Sized>(a: &P) -> PickandsDiagnostics {
    let n = 1000;
    let values: Vec<f64> = (0..=n).map(|k| a.value(k as f64 / n as f64)).collect();
    let mut bound: f64 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let t = k as f64 / n as f64;
        bound = bound.max(t.max(1.0 - t) - v).max(v - 1.0);
        if !v.is_finite() {
            bound = f64::INFINITY;
        }
    }
    let mut convex: f64 = 0.0;
    for k in 1..n {
        let second = values[k - 1] - 2.0 * values[k] + values[k + 1];
        convex = convex.max(-second);
    }
    PickandsDiagnostics {
        max_bound_violation: bound,
        max_convexity_violation: convex,
        a_at_0: values[0],
        a_at_1: values[n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::williamson::{w_power_complement, w_uniform_power};

    fn quadratic() -> PickandsFn {
        PickandsFn::new(|t| t * t - t + 1.0, |t| 2.0 * t - 1.0, |_| 2.0)
    }

    #[test]
    fn rotation_of_root_transform_gives_quadratic() {
        let w = w_uniform_power(2.0).unwrap();
        let a = rotate(&w, &default_t_nodes()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=2000 {
            let t = k as f64 / 2000.0;
            worst = worst.max((a.value(t) - (t * t - t + 1.0)).abs());
        }
        assert!(worst <= 1e-6, "{worst}");
        assert_eq!(a.ap()[0], -1.0);
        assert!((a.ap().last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_of_linear_transform_is_independence() {
        let w = w_power_complement(1.0).unwrap();
        let a = rotate(&w, &default_t_nodes()).unwrap();
        for k in 0..=100 {
            let (v, d1, d2) = a.eval(k as f64 / 100.0);
            assert!((v - 1.0).abs() < 1e-12 && d1.abs() < 1e-12 && d2.abs() < 1e-12);
        }
        assert!(rotate(&w_power_complement(0.0).unwrap(), &default_t_nodes()).is_err());
    }

    #[test]
    fn inverse_rotation_of_quadratic() {
        let w = rotate_inverse(quadratic()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            worst = worst.max((w.value(x) - (x - 2.0 * x.sqrt() + 1.0)).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
        let ind = rotate_inverse(Independence).unwrap();
        assert!((ind.value(0.3) - 0.7).abs() < 1e-14);
        assert!(rotate_inverse(PerfectDependence).is_err());
    }

    #[test]
    fn h_density_cases() {
        assert_eq!(h_density(&Independence, 0.3), 1.0);
        let q = quadratic();
        for k in 0..=20 {
            let z = k as f64 / 20.0;
            assert!((h_density(&q, z) - h_density(&q, 1.0 - z)).abs() < 1e-12);
        }
        assert!(h_density(&q, 0.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_measures() {
        let w = w_power_complement(1.0).unwrap();
        let s = spectral_from_w(&w, &linspace(0.0, 1.0, 11));
        assert!((s.h0 - 1.0).abs() < 1e-14 && (s.h1 - 1.0).abs() < 1e-14);
        let w = w_uniform_power(2.0).unwrap();
        let x: Vec<f64> = linspace(0.0, 1.0, 400).iter().map(|v| v * v).collect();
        let s = spectral_from_w(&w, &x);
        assert_eq!(s.h0, 0.0);
        assert!(s.h1.abs() < 1e-15);
        assert!((s.first_moment() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn association_measures() {
        let q = quadratic();
        assert_eq!(upper_tail(&q), 0.5);
        assert!((blomqvist_beta(&q) - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert_eq!(blomqvist_beta(&Independence), 0.0);
        assert_eq!(blomqvist_beta(&PerfectDependence), 1.0);
        assert!(gini_from_pickands(&Independence).abs() < 1e-12);
        assert!((gini_from_pickands(&PerfectDependence) - 1.0).abs() < 1e-9);
        // U² density 1/(2√x): G = 2/3
        assert!((gini_from_density(|x: f64| 0.5 / x.sqrt()) - 2.0 / 3.0).abs() < 1e-6);
        assert!((gini_from_pickands(&q) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn khoudraji_identity_and_slopes() {
        let q = quadratic();
        let same = khoudraji(q.clone(), 1.0, 1.0).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((same.value(t) - q.value(t)).abs() < 1e-15);
        }
        let k = khoudraji(q, 0.6, 0.3).unwrap();
        assert!((k.eval(0.0).1 + 0.3).abs() < 1e-14);
        assert!((k.eval(1.0).1 - 0.6).abs() < 1e-14);
        for j in 1..50 {
            let t = j as f64 / 50.0;
            let h = 1e-5;
            let (_, d1, d2) = k.eval(t);
            assert!((d1 - (k.value(t + h) - k.value(t - h)) / (2.0 * h)).abs() < 1e-8);
            assert!((d2 - (k.eval(t + h).1 - k.eval(t - h).1) / (2.0 * h)).abs() < 1e-6);
        }
        assert!(validate_pickands(&k).is_valid(1e-12));
        assert!(khoudraji(Independence, 0.0, 0.5).is_err());
    }

    #[test]
    fn mirror_and_symmetrize() {
        let k = khoudraji(quadratic(), 0.5, 0.1).unwrap();
        let m = mirror(mirror(k.clone()));
        let s = symmetrize(k.clone());
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            assert!((m.value(t) - k.value(t)).abs() < 1e-14);
            assert!((s.value(t) - s.value(1.0 - t)).abs() < 1e-15);
        }
        let sq = symmetrize(quadratic());
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            assert!((sq.value(t) - quadratic().value(t)).abs() < 1e-12);
        }
        let model = PickandsModel::tabulate(&k, &default_t_nodes()).unwrap();
        let mm = model.mirrored();
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            assert!((mm.value(t) - model.value(1.0 - t)).abs() < 1e-12);
        }
        let sym = model.symmetrized();
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            assert!((sym.value(t) - sym.value(1.0 - t)).abs() < 1e-10);
        }
    }

    #[test]
    fn validation_flags_violations() {
        assert!(validate_pickands(&quadratic()).max_bound_violation <= 1e-10);
        assert!(validate_pickands(&quadratic()).max_convexity_violation <= 1e-10);
        let flat = PickandsFn::new(|_| 0.4, |_| 0.0, |_| 0.0);
        assert!(validate_pickands(&flat).max_bound_violation > 0.5);
        let hump = PickandsFn::new(
            |t: f64| (0.75 + t - t * t).max(t.max(1.0 - t)).min(1.0),
            |_| 0.0,
            |_| 0.0,
        );
        assert!(validate_pickands(&hump).max_convexity_violation > 1e-7);
        assert!(validate_pickands(&PerfectDependence).is_valid(1e-12));
    }
}

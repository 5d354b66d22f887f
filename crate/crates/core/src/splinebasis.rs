//! Orthonormal zero-integral spline bases on `[0, 1]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Interior knots and polynomial degree of a clamped spline space on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotConfig {
    pub interior_knots: Vec<f64>,
    pub degree: usize,
}

impl KnotConfig {
    pub fn new(interior_knots: Vec<f64>, degree: usize) -> Result<Self> {
        let cfg = Self { interior_knots, degree };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n` equispaced interior knots `j / (n + 1)`.
    pub fn uniform(n: usize, degree: usize) -> Self {
        Self {
            interior_knots: (1..=n).map(|j| j as f64 / (n + 1) as f64).collect(),
            degree,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::invalid("spline degree must be at least 1"));
        }
        if self.interior_knots.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(Error::invalid("interior knots must lie strictly inside (0, 1)"));
        }
        if self.interior_knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("interior knots must be strictly increasing"));
        }
        Ok(())
    }

    /// Dimension of the zero-integral spline space.
    pub fn zero_integral_dim(&self) -> usize {
        self.interior_knots.len() + self.degree
    }
}

/// Interior knots at equally spaced sample quantiles.
pub fn quantile_knots(sample: &[f64], n_interior: usize, degree: usize) -> Result<KnotConfig> {
    if n_interior == 0 {
        return KnotConfig::new(Vec::new(), degree);
    }
    if sample.len() < n_interior + 2 {
        return Err(Error::invalid(format!(
            "need at least {} sample values for {} knots",
            n_interior + 2,
            n_interior
        )));
    }
    if sample.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::invalid("knot sample values must lie in (0, 1)"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut knots: Vec<f64> = Vec::with_capacity(n_interior);
    for j in 1..=n_interior {
        let q = quantile_sorted(&sorted, j as f64 / (n_interior + 1) as f64);
        if knots.last().is_none_or(|&last| q > last + 1e-10) {
            knots.push(q);
        }
    }
    if knots.len() < n_interior {
        return Err(Error::invalid(format!(
            "sample ties leave only {} distinct knots out of {}",
            knots.len(),
            n_interior
        )));
    }
    KnotConfig::new(knots, degree)
}

/// Linear-interpolation sample quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Orthonormal basis of the zero-integral splines over a [`KnotConfig`].
#[derive(Debug, Clone)]
pub struct ZBasis {
    config: KnotConfig,
    /// Full clamped knot vector with `degree + 1` copies of 0 and 1.
    knots: Vec<f64>,
    /// `dim x n_bsplines` matrix mapping B-spline values to basis values.
    transform: DMatrix<f64>,
    /// Composite Gauss rule over the knot intervals.
    quad_x: Vec<f64>,
    quad_w: Vec<f64>,
}

impl ZBasis {
    pub fn new(config: KnotConfig) -> Result<Self> {
        config.validate()?;
        let d = config.degree;
        let dim = config.zero_integral_dim();
        if dim < 1 {
            return Err(Error::invalid("zero-integral spline space is empty"));
        }
        let mut knots = vec![0.0; d + 1];
        knots.extend_from_slice(&config.interior_knots);
        knots.extend(std::iter::repeat_n(1.0, d + 1));
        let nb = dim + 1;

        let mut breaks = vec![0.0];
        breaks.extend_from_slice(&config.interior_knots);
        breaks.push(1.0);
        let rule = GaussRule::new(2 * d + 2);
        let mut quad_x = Vec::new();
        let mut quad_w = Vec::new();
        for e in breaks.windows(2) {
            for (x, w) in rule.on(e[0], e[1]) {
                quad_x.push(x);
                quad_w.push(w);
            }
        }

        // Gram matrix of the raw B-splines.
        let mut gram = DMatrix::<f64>::zeros(nb, nb);
        let mut ders = vec![vec![0.0; d + 1]; 1];
        for (&x, &w) in quad_x.iter().zip(&quad_w) {
            let span = find_span(&knots, d, nb, x);
            bspline_derivatives(&knots, d, span, x, 0, &mut ders);
            for a in 0..=d {
                for b in 0..=d {
                    gram[(span - d + a, span - d + b)] += w * ders[0][a] * ders[0][b];
                }
            }
        }
        // Zero-integral differences of normalized B-splines.
        let integrals: Vec<f64> = (0..nb)
            .map(|j| (knots[j + d + 1] - knots[j]) / (d + 1) as f64)
            .collect();
        let mut k = DMatrix::<f64>::zeros(dim, nb);
        for r in 0..dim {
            k[(r, r)] = 1.0 / integrals[r];
            k[(r, r + 1)] = -1.0 / integrals[r + 1];
        }
        let g = &k * &gram * k.transpose();
        let g = 0.5 * (&g + g.transpose());
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let mut transform = DMatrix::<f64>::zeros(dim, nb);
        for (row, &idx) in order.iter().enumerate() {
            let lam = eig.eigenvalues[idx];
            if !(lam > 0.0) {
                return Err(Error::numerical("zero-integral Gram matrix is not positive definite"));
            }
            let v = eig.eigenvectors.column(idx);
            let mut coef = (v.transpose() * &k) / lam.sqrt();
            let (imax, _) = coef
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, &c)| if c.abs() > acc.1.abs() + 1e-14 { (i, c) } else { acc });
            if coef[imax] < 0.0 {
                coef = -coef;
            }
            transform.row_mut(row).copy_from(&coef);
        }
        Ok(Self { config, knots, transform, quad_x, quad_w })
    }

    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn degree(&self) -> usize {
        self.config.degree
    }

    pub fn config(&self) -> &KnotConfig {
        &self.config
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.config.interior_knots
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// Composite Gauss nodes and weights (`2d + 2` per knot interval).
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.quad_x, &self.quad_w)
    }

    fn n_bsplines(&self) -> usize {
        self.transform.ncols()
    }

    /// Basis values (or derivatives) at `x`.
    pub fn eval(&self, x: f64, deriv_order: usize) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("basis evaluated outside [0, 1]: {x}")));
        }
        if deriv_order > 2 {
            return Err(Error::invalid("only derivatives up to order 2 are supported"));
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, deriv_order, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`ZBasis::eval`] writing into `out`.
    pub fn eval_into(&self, x: f64, deriv_order: usize, out: &mut [f64]) {
        let d = self.config.degree;
        let nb = self.n_bsplines();
        let x = x.clamp(0.0, 1.0);
        let span = find_span(&self.knots, d, nb, x);
        let mut ders = vec![vec![0.0; d + 1]; deriv_order + 1];
        bspline_derivatives(&self.knots, d, span, x, deriv_order, &mut ders);
        let row = &ders[deriv_order];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (a, &b) in row.iter().enumerate() {
                acc += self.transform[(i, span - d + a)] * b;
            }
            *o = acc;
        }
    }

    /// Value (or derivative) of the spline `Σ coeffs[i] Z_i` at `x`.
    pub fn spline(&self, coeffs: &[f64], x: f64, deriv_order: usize) -> f64 {
        let mut z = vec![0.0; self.dim()];
        self.eval_into(x, deriv_order, &mut z);
        z.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Row-major design matrix: `out[j][i] = Z_i^{(k)}(xs[j])`.
    pub fn design(&self, xs: &[f64], deriv_order: usize) -> Vec<Vec<f64>> {
        xs.iter()
            .map(|&x| {
                let mut row = vec![0.0; self.dim()];
                self.eval_into(x, deriv_order, &mut row);
                row
            })
            .collect()
    }

    /// `Ω_ij = ∫ Z_i'' Z_j''`, exact for the piecewise-polynomial integrand.
    pub fn curvature_matrix(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut omega = DMatrix::<f64>::zeros(dim, dim);
        let mut z = vec![0.0; dim];
        for (&x, &w) in self.quad_x.iter().zip(&self.quad_w) {
            self.eval_into(x, 2, &mut z);
            for i in 0..dim {
                for j in 0..=i {
                    omega[(i, j)] += w * z[i] * z[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                omega[(j, i)] = omega[(i, j)];
            }
        }
        omega
    }

    /// Coefficients of the orthogonal projection of `-(1 + log x) / 2`.
    ///
    /// The first knot interval is split geometrically towards 0 so that the
    /// logarithmic singularity is integrated accurately.
    pub fn project_center(&self) -> Vec<f64> {
        let d = self.config.degree;
        let rule = GaussRule::new(2 * d + 2);
        let mut breaks = vec![0.0];
        breaks.extend_from_slice(&self.config.interior_knots);
        breaks.push(1.0);
        let first = breaks[1];
        let mut edges = vec![0.0];
        for k in (0..16).rev() {
            edges.push(first * 0.5f64.powi(k));
        }
        edges.extend_from_slice(&breaks[2..]);
        let mut out = vec![0.0; self.dim()];
        let mut z = vec![0.0; self.dim()];
        for e in edges.windows(2) {
            for (x, w) in rule.on(e[0], e[1]) {
                let g = -0.5 * (1.0 + x.ln());
                self.eval_into(x, 0, &mut z);
                for (o, zi) in out.iter_mut().zip(&z) {
                    *o += w * g * zi;
                }
            }
        }
        out
    }
}

/// Knot span index `i` with `knots[i] <= x < knots[i + 1]` (last span for x = 1).
fn find_span(knots: &[f64], degree: usize, n_basis: usize, x: f64) -> usize {
    if x >= knots[n_basis] {
        return n_basis - 1;
    }
    let k = knots.partition_point(|&v| v <= x);
    (k - 1).clamp(degree, n_basis - 1)
}

/// Non-zero B-splines and their derivatives at `x` (NURBS book A2.3).
///
/// `ders[k][j]` receives the k-th derivative of basis function `span - p + j`.
fn bspline_derivatives(
    knots: &[f64],
    p: usize,
    span: usize,
    x: f64,
    n_ders: usize,
    ders: &mut [Vec<f64>],
) {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n_ders {
            let mut dval = 0.0;
            let rk = r as isize - k as isize;
            let pk = p as isize - k as isize;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                dval = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][idx];
                dval += a[s2][j] * ndu[idx][pk as usize];
            }
            if r as isize <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                dval += a[s2][k] * ndu[r][pk as usize];
            }
            if k <= p {
                ders[k][r] = dval;
            } else {
                ders[k][r] = 0.0;
            }
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n_ders {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= p as f64 - k as f64;
    }
}

//! Piecewise Hermite interpolation honoring values and up to two derivatives.

use crate::error::{Error, Result};

/// Piecewise polynomial matching `(y, y', y'')` at both ends of every interval.
///
/// With all six constraints finite each piece is the quintic Hermite
/// interpolant, which makes the whole curve C². Non-finite derivative entries
/// are dropped from the local system, lowering the degree of that piece.
#[derive(Debug, Clone)]
pub struct HermiteSpline {
    x: Vec<f64>,
    /// Per interval coefficients in the local variable `s = (x - x_l) / h`.
    coeffs: Vec<[f64; 6]>,
}

impl HermiteSpline {
    pub fn new(x: &[f64], y: &[f64], dy: &[f64], ddy: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || dy.len() != n || ddy.len() != n {
            return Err(Error::invalid("Hermite spline needs matching arrays of length >= 2"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("Hermite spline nodes must be strictly increasing"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Hermite spline values must be finite"));
        }
        let mut coeffs = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let h = x[j + 1] - x[j];
            coeffs.push(local_piece(
                h,
                [y[j], dy[j], ddy[j]],
                [y[j + 1], dy[j + 1], ddy[j + 1]],
            )?);
        }
        Ok(Self { x: x.to_vec(), coeffs })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    fn interval(&self, x: f64) -> usize {
        let k = self.x.partition_point(|&v| v <= x);
        k.saturating_sub(1).min(self.coeffs.len() - 1)
    }

    /// Value, first and second derivative at `x` (extrapolates outside the nodes).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let j = self.interval(x);
        let h = self.x[j + 1] - self.x[j];
        let s = (x - self.x[j]) / h;
        let c = &self.coeffs[j];
        let v = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let d = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let dd = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        (v, d / h, dd / (h * h))
    }

    pub fn value(&self, x: f64) -> f64 {
        let j = self.interval(x);
        let h = self.x[j + 1] - self.x[j];
        let s = (x - self.x[j]) / h;
        let c = &self.coeffs[j];
        c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))))
    }
}

/// Builds one piece in local coordinates `s ∈ [0, 1]`.
fn local_piece(h: f64, left: [f64; 3], right: [f64; 3]) -> Result<[f64; 6]> {
    // Each constraint is (endpoint s, derivative order, scaled target).
    let mut rows: Vec<(f64, usize, f64)> = Vec::with_capacity(6);
    let scale = [1.0, h, h * h];
    for (s, vals) in [(0.0, left), (1.0, right)] {
        for (k, &v) in vals.iter().enumerate() {
            if v.is_finite() {
                rows.push((s, k, v * scale[k]));
            }
        }
    }
    let m = rows.len();
    let mut a = vec![[0.0f64; 7]; m];
    for (r, &(s, k, target)) in rows.iter().enumerate() {
        for p in 0..m {
            a[r][p] = monomial_derivative(p, k, s);
        }
        a[r][m] = target;
    }
    // Gaussian elimination with partial pivoting on the small dense system.
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::numerical("singular Hermite system"));
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let factor = a[r][col] / a[col][col];
                if factor != 0.0 {
                    for p in col..=m {
                        a[r][p] -= factor * a[col][p];
                    }
                }
            }
        }
    }
    let mut c = [0.0; 6];
    for p in 0..m {
        c[p] = a[p][m] / a[p][p];
    }
    Ok(c)
}

/// k-th derivative of s^p evaluated at s (s is 0 or 1 here).
fn monomial_derivative(p: usize, k: usize, s: f64) -> f64 {
    if k > p {
        return 0.0;
    }
    let mut factor = 1.0;
    for i in 0..k {
        factor *= (p - i) as f64;
    }
    factor * s.powi((p - k) as i32)
}

//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Brent's method on `[a, b]` with precomputed endpoint values.
///
/// Endpoint values are passed in explicitly so callers can supply one-sided
/// limits at points where `f` itself is not defined (e.g. `v = 0` for a
/// conditional copula CDF). `f` is only evaluated strictly inside the bracket.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::numerical(format!(
            "root not bracketed on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}"
        )));
    }
    let (mut xpre, mut xcur) = (a, b);
    let (mut fpre, mut fcur) = (fa, fb);
    let (mut xblk, mut fblk) = (0.0, 0.0);
    let (mut spre, mut scur) = (0.0, 0.0);
    for _ in 0..max_iter {
        if fpre != 0.0 && fcur != 0.0 && fpre.signum() != fcur.signum() {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }
        let delta = 0.5 * (xtol + 4.0 * f64::EPSILON * xcur.abs());
        let sbis = 0.5 * (xblk - xcur);
        if fcur == 0.0 || sbis.abs() < delta {
            return Ok(xcur);
        }
        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                // secant
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                // inverse quadratic interpolation
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }
        xpre = xcur;
        fpre = fcur;
        if scur.abs() > delta {
            xcur += scur;
        } else {
            xcur += if sbis > 0.0 { delta } else { -delta };
        }
        // keep evaluations strictly inside the original bracket
        xcur = xcur.clamp(a.min(b), a.max(b));
        fcur = f(xcur);
        if !fcur.is_finite() {
            return Err(Error::numerical(format!("non-finite function value at {xcur}")));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        reason: "Brent root finder".into(),
    })
}

/// Brent's method evaluating `f` at both endpoints.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent(f, a, b, fa, fb, xtol, 200)
}

/// Plain bisection for an increasing-crossing function with `g(lo) < 0 < g(hi)`
/// (or the reverse). Stops when `|g| <= ftol` or the bracket shrinks to `xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut g: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
) -> Result<f64> {
    let glo = g(lo);
    let ghi = g(hi);
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() || glo.is_nan() || ghi.is_nan() {
        return Err(Error::numerical(format!(
            "no sign change on [{lo}, {hi}]: {glo}, {ghi}"
        )));
    }
    let lo_negative = glo < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= ftol || (hi - lo) <= xtol {
            return Ok(mid);
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent_root(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-14).unwrap();
        assert!((r - 2.0945514815423265).abs() < 1e-12);
    }

    #[test]
    fn brent_uses_supplied_endpoint_limits() {
        // f undefined at 0 (log), limit -inf replaced by -1
        let r = brent(|x| x.ln() + 1.0, 0.0, 1.0, -1.0, 1.0, 1e-14, 200).unwrap();
        assert!((r - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn brent_rejects_missing_bracket() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn bisection_meets_tolerance() {
        let r = bisect(|x| x * x - 0.25, 0.0, 1.0, 1e-16, 1e-14).unwrap();
        assert!((r - 0.5).abs() < 1e-13);
    }
}

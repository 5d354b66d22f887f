//! From spline coefficients to Pickands functions: clr density, Williamson
//! grid, normalization and rotation.

use std::sync::Arc;

use crate::bayes::ClrDensity;
use crate::error::{Error, Result};
use crate::pickands::{default_t_nodes, rotate, PickandsModel};
use crate::quadrature::{geometric_nodes, linspace, sorted_unique};
use crate::splinebasis::ZBasis;
use crate::williamson::{normalize_w, williamson_from_density, WilliamsonGrid};

/// Smallest positive node placed near the origin.
pub const MIN_NODE: f64 = 1e-10;

/// Largest ratio between consecutive nodes close to 0.
const NODE_RATIO: f64 = 1.1;

/// Refines a node set `0 = a_0 < … < a_m = 1` for integrating `f(r)/r`.
///
/// Adds geometric nodes below the first positive anchor and splits every
/// anchor interval into at least four pieces, geometrically where the
/// interval spans a large ratio.
pub fn refined_nodes(anchors: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    let first = anchors.iter().copied().find(|&a| a > 0.0).unwrap_or(1.0);
    if first > MIN_NODE {
        out.extend(geometric_nodes(MIN_NODE, first, NODE_RATIO));
    }
    for e in anchors.windows(2) {
        let (a, b) = (e[0], e[1]);
        if a <= 0.0 {
            out.push(b);
            continue;
        }
        let ratio = b / a;
        let pieces = ((ratio.ln() / NODE_RATIO.ln()).ceil() as usize).clamp(4, 64);
        for k in 1..=pieces {
            let s = k as f64 / pieces as f64;
            let x = if ratio > 1.5 { a * ratio.powf(s) } else { a + (b - a) * s };
            out.push(x);
        }
        *out.last_mut().unwrap() = b;
    }
    let mut out = sorted_unique(out, 0.0);
    *out.last_mut().unwrap() = 1.0;
    out
}

/// Node set used to tabulate Williamson transforms of spline densities.
pub fn canonical_x_nodes(basis: &ZBasis) -> Vec<f64> {
    let mut anchors = linspace(0.0, 1.0, 257);
    anchors.extend_from_slice(basis.interior_knots());
    refined_nodes(&sorted_unique(anchors, 1e-12))
}

/// Everything produced along the way from coefficients to a Pickands function.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub density: ClrDensity,
    pub williamson: WilliamsonGrid,
    pub pickands: PickandsModel,
}

/// Williamson grid of a density, normalized when its `W(0⁺)` estimate is off by
/// more than 1e−3 (and `normalize` is set), then rotated onto `t_nodes`.
pub fn pickands_from_density<F: Fn(f64) -> f64>(
    f: F,
    x_nodes: &[f64],
    t_nodes: &[f64],
    normalize: bool,
) -> Result<(WilliamsonGrid, PickandsModel)> {
    let mut grid = williamson_from_density(f, x_nodes)?;
    let est = grid.w0_estimate();
    if normalize && (est - 1.0).abs() > 1e-3 {
        log::debug!("normalizing Williamson grid with W(0+) estimate {est}");
        grid = normalize_w(&grid)?;
    }
    let pickands = rotate(&grid, t_nodes)?;
    Ok((grid, pickands))
}

/// Runs the full construction for coefficients `theta` over `basis`.
pub fn pickands_from_theta(
    basis: Arc<ZBasis>,
    theta: &[f64],
    center: bool,
    normalize: bool,
) -> Result<PipelineOutput> {
    let x_nodes = canonical_x_nodes(&basis);
    let density = ClrDensity::with_grid(basis, theta.to_vec(), center, x_nodes.clone())?;
    let (williamson, pickands) =
        pickands_from_density(|x| density.pdf(x), &x_nodes, &default_t_nodes(), normalize)?;
    if williamson.monotonicity_violation() > 1e-9 {
        return Err(Error::numerical("Williamson grid lost 2-monotonicity"));
    }
    Ok(PipelineOutput { density, williamson, pickands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pickands::{gini_from_pickands, validate_pickands, PickandsFunction};
    use crate::splinebasis::KnotConfig;

    #[test]
    fn refined_nodes_are_increasing_and_keep_anchors() {
        let anchors = vec![0.0, 1e-4, 0.01, 0.5, 1.0];
        let n = refined_nodes(&anchors);
        assert_eq!(n[0], 0.0);
        assert_eq!(*n.last().unwrap(), 1.0);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
        for a in &anchors {
            assert!(n.contains(a));
        }
        assert!(n.windows(2).skip(1).all(|w| w[1] / w[0] <= 1.5));
    }

    #[test]
    fn center_model_is_close_to_quadratic() {
        let basis = Arc::new(ZBasis::new(KnotConfig::uniform(10, 3)).unwrap());
        let out = pickands_from_theta(basis, &[0.0; 13], true, true).unwrap();
        let a = &out.pickands;
        assert!(validate_pickands(a).is_valid(1e-6));
        assert!((a.value(0.5) - 0.75).abs() < 0.02, "{}", a.value(0.5));
        assert!((gini_from_pickands(a) - 2.0 / 3.0).abs() < 0.03);
        assert!((out.williamson.w0_estimate() - 1.0).abs() < 1e-12);
    }
}

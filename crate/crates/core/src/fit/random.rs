//! Random extreme-value copulas drawn from a truncated curvature prior.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::pickands::{validate_pickands, PickandsModel};
use crate::pipeline::pickands_from_theta;
use crate::splinebasis::ZBasis;

use super::mcmc::Metropolis;

/// Steps spent adapting the proposal scale before thinning is chosen.
const ADAPT_STEPS: usize = 5000;

/// Bounds on the number of chain steps between retained states.
const THIN_RANGE: (usize, usize) = (25, 1_000_000);

/// States tried for one output before giving up.
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone)]
pub struct RandomPickands {
    /// Coefficients relative to the center model.
    pub theta: Vec<f64>,
    /// Whether `pickands` is the mirror image of the model built from `theta`.
    pub mirrored: bool,
    pub pickands: PickandsModel,
    /// Chain states rejected before this one was accepted.
    pub rejected: usize,
}

/// Log density `−λ θ̄ᵀΩθ̄` on `‖θ‖ ≤ R`, with `θ̄` including the center coefficients.
pub fn truncated_prior(basis: &ZBasis, lambda: f64, radius: f64) -> impl Fn(&[f64]) -> f64 + use<> {
    let omega = basis.curvature_matrix();
    let center = DVector::from_vec(basis.project_center());
    move |theta: &[f64]| {
        let v = DVector::from_column_slice(theta);
        if v.norm() > radius {
            return f64::NEG_INFINITY;
        }
        let bar = &v + &center;
        -lambda * (bar.transpose() * &omega * &bar)[(0, 0)]
    }
}

/// Draws `n` Pickands functions; every second one (odd 0-based index) is mirrored.
///
/// Retained states are `(R / step)²` chain steps apart, and the first fifth of
/// the run is discarded.
/// States whose pipeline fails or whose Pickands function violates the
/// constraints by more than 1e−6 are skipped in favour of later chain states.
pub fn random_pickands(
    lambda: f64,
    radius: f64,
    n: usize,
    seed: u64,
    basis: Arc<ZBasis>,
) -> Result<Vec<RandomPickands>> {
    if !(lambda >= 0.0) || !(radius > 0.0) {
        return Err(Error::invalid("need lambda >= 0 and R > 0"));
    }
    let dim = basis.dim();
    let prior = truncated_prior(&basis, lambda, radius);
    let step = 2.4 * radius / dim as f64;
    let mut chain = Metropolis::new(prior, &vec![0.0; dim], step, seed)?;
    chain.adapt(ADAPT_STEPS);
    // A random walk needs about (R / step)² steps to cross the support.
    let thin = ((radius / chain.step_scale()).powi(2).ceil() as usize).clamp(THIN_RANGE.0, THIN_RANGE.1);
    let burn = (n * thin / 4).saturating_sub(ADAPT_STEPS);
    for _ in 0..burn {
        chain.step();
    }
    log::debug!("random generator: step {:.3e}, thinning {thin}", chain.step_scale());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut rejected = 0;
        let (theta, pickands) = loop {
            for _ in 0..thin {
                chain.step();
            }
            let theta = chain.state().to_vec();
            match pickands_from_theta(basis.clone(), &theta, true, true) {
                Ok(o) if validate_pickands(&o.pickands).is_valid(1e-6) => break (theta, o.pickands),
                Ok(_) => log::debug!("random state produced an invalid Pickands function"),
                Err(e) => log::debug!("random state failed: {e}"),
            }
            rejected += 1;
            if rejected >= MAX_ATTEMPTS {
                return Err(Error::NoConvergence {
                    iterations: rejected,
                    reason: "no valid Pickands function among the chain states".into(),
                });
            }
        };
        let mirrored = out.len() % 2 == 1;
        let pickands = if mirrored { pickands.mirrored() } else { pickands };
        out.push(RandomPickands { theta, mirrored, pickands, rejected });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pickands::PickandsFunction;
    use crate::splinebasis::KnotConfig;

    #[test]
    fn mirrored_elements_match_their_source() {
        let basis = Arc::new(ZBasis::new(KnotConfig::uniform(10, 3)).unwrap());
        let out = random_pickands(1e-4, 5.0, 4, 17, basis.clone()).unwrap();
        for (i, r) in out.iter().enumerate() {
            assert!(r.theta.iter().map(|v| v * v).sum::<f64>().sqrt() <= 5.0);
            assert_eq!(r.mirrored, i % 2 == 1);
            let src = pickands_from_theta(basis.clone(), &r.theta, true, true).unwrap().pickands;
            for k in 1..50 {
                let t = k as f64 / 50.0;
                let want = if r.mirrored { src.value(1.0 - t) } else { src.value(t) };
                assert!((r.pickands.value(t) - want).abs() < 1e-12);
            }
        }
    }
}

use std::sync::Arc;

use evcop_core::bayes::tvd;
use evcop_core::copula::{gini_from_copula, supnorm_bound_check, EvCopula};
use evcop_core::families::{Family, ParametricPickands};
use evcop_core::fit::{fit_copula, optimize, z_transform, FitConfig};
use evcop_core::pickands::{
    gini_from_density, gini_from_pickands, h_density, khoudraji, spectral_from_w, validate_pickands,
    PickandsFunction,
};
use evcop_core::pipeline::pickands_from_theta;
use evcop_core::quadrature::integrate_unit;
use evcop_core::splinebasis::{KnotConfig, ZBasis};
use evcop_core::williamson::WilliamsonFunction;
use proptest::prelude::*;

fn basis() -> Arc<ZBasis> {
    Arc::new(ZBasis::new(KnotConfig::uniform(10, 3)).unwrap())
}

fn family() -> impl Strategy<Value = ParametricPickands> {
    (0..3usize, 0.0..1.0f64, 0.2..=1.0f64, 0.2..=1.0f64).prop_map(|(f, s, al, be)| {
        let (family, theta) = match f {
            0 => (Family::Gumbel, 1.0 + 5.0 * s),
            1 => (Family::Galambos, 0.2 + 3.8 * s),
            _ => (Family::HuslerReiss, 0.3 + 4.7 * s),
        };
        ParametricPickands::with_asymmetry(family, theta, al, be).unwrap()
    })
}

fn unit() -> impl Strategy<Value = f64> {
    0.01..0.99f64
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn williamson_distance_is_bounded_by_total_variation(
        a in prop::collection::vec(-2.0..2.0f64, 13),
        b in prop::collection::vec(-2.0..2.0f64, 13),
    ) {
        let basis = basis();
        let f = pickands_from_theta(basis.clone(), &a, true, false).unwrap();
        let g = pickands_from_theta(basis, &b, true, false).unwrap();
        let d = tvd(|x| f.density.pdf(x), |x| g.density.pdf(x));
        for k in 0..=500 {
            let x = k as f64 / 500.0;
            prop_assert!((f.williamson.value(x) - g.williamson.value(x)).abs() <= 2.0 * d + 1e-9);
        }
    }

    #[test]
    fn copula_distance_respects_pickands_bound(a in family(), b in family()) {
        let check = supnorm_bound_check(&a, &b);
        prop_assert!(check.holds, "{:?}", check);
    }

    #[test]
    fn max_stability(p in family(), u in unit(), v in unit(), n in 2..20u32) {
        let c = EvCopula::new(p);
        let n = n as f64;
        prop_assert!((c.cdf(u.powf(1.0 / n), v.powf(1.0 / n)).powf(n) - c.cdf(u, v)).abs() <= 1e-12);
    }

    #[test]
    fn rectangles_have_non_negative_mass(p in family(), a in unit(), b in unit(), x in unit(), y in unit()) {
        let c = EvCopula::new(p);
        let (u1, u2) = (a.min(b), a.max(b));
        let (v1, v2) = (x.min(y), x.max(y));
        prop_assert!(c.cdf(u2, v2) - c.cdf(u2, v1) - c.cdf(u1, v2) + c.cdf(u1, v1) >= -1e-14);
    }

    #[test]
    fn partials_match_finite_differences(p in family(), u in 0.05..0.95f64, v in 0.05..0.95f64) {
        let c = EvCopula::new(p);
        let h = 1e-6;
        let du = (c.cdf(u + h, v) - c.cdf(u - h, v)) / (2.0 * h);
        let dv = (c.cdf(u, v + h) - c.cdf(u, v - h)) / (2.0 * h);
        prop_assert!((c.partial_u(u, v) - du).abs() <= 1e-6 * du.abs().max(1e-3));
        prop_assert!((c.partial_v(u, v) - dv).abs() <= 1e-6 * dv.abs().max(1e-3));
        let h = 1e-4;
        let mixed = (c.partial_u(u, v + h) - c.partial_u(u, v - h)) / (2.0 * h);
        prop_assert!((c.pdf(u, v) - mixed).abs() <= 1e-5 * mixed.abs().max(1e-3));
    }

    #[test]
    fn khoudraji_stays_a_pickands_function(p in family(), al in 0.05..=1.0f64, be in 0.05..=1.0f64) {
        let k = khoudraji(p, al, be).unwrap();
        prop_assert!(validate_pickands(&k).is_valid(1e-12));
        prop_assert!((k.eval(0.0).1 - be * p.eval(0.0).1).abs() < 1e-12);
        prop_assert!((k.eval(1.0).1 - al * p.eval(1.0).1).abs() < 1e-12);
    }

    #[test]
    fn survival_copula_is_an_involution(p in family(), u in unit(), v in unit()) {
        let c = EvCopula::new(p);
        let twice = c.survival().survival();
        prop_assert_eq!(twice.cdf(u, v), c.cdf(u, v));
        let s = c.survival();
        let expected = u + v - 1.0 + c.cdf(1.0 - u, 1.0 - v);
        prop_assert!((s.cdf(u, v) - expected).abs() <= 1e-14);
    }
}

#[test]
fn flipped_fit_is_the_mirror_of_the_reflected_fit() {
    let truth = EvCopula::new(ParametricPickands::with_asymmetry(Family::Gumbel, 2.0, 0.5, 1.0).unwrap());
    let z = z_transform(&truth.simulate(600, 13).unwrap()).unwrap();
    let reflected: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
    let flipped = optimize(&z, &FitConfig { force_flip: Some(true), ..FitConfig::default() }).unwrap();
    let direct = optimize(&reflected, &FitConfig { force_flip: Some(false), ..FitConfig::default() }).unwrap();
    assert!(flipped.flipped() && !direct.flipped());
    assert_eq!(flipped.theta(), direct.theta());
    for k in 0..=200 {
        let t = k as f64 / 200.0;
        assert!((flipped.pickands().value(t) - direct.pickands().value(1.0 - t)).abs() < 1e-12);
    }
}

#[test]
fn heavy_penalty_returns_the_center_model() {
    let truth = EvCopula::new(ParametricPickands::new(Family::Galambos, 2.0).unwrap());
    let sample = truth.simulate(500, 3).unwrap();
    let cfg = FitConfig { lambda: 1e6, ordering_heuristic: false, ..FitConfig::default() };
    let fit = fit_copula(&sample, &cfg).unwrap();
    let center = pickands_from_theta(fit.basis().clone(), &vec![0.0; fit.basis().dim()], true, true).unwrap();
    let worst = (0..=200)
        .map(|k| k as f64 / 200.0)
        .map(|t| (fit.pickands().value(t) - center.pickands.value(t)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn center_model_is_self_consistent() {
    let b = basis();
    let out = pickands_from_theta(b.clone(), &vec![0.0; b.dim()], true, true).unwrap();
    let a = &out.pickands;
    assert!(validate_pickands(a).is_valid(1e-9));
    // the center is the spline projection of the U² profile, not U² itself
    assert!((a.value(0.5) - 0.75).abs() < 5e-3);
    let g = gini_from_pickands(a);
    assert!((g - 2.0 / 3.0).abs() < 1e-2, "{g}");
    assert!((gini_from_density(|x| out.density.pdf(x)) - g).abs() < 5e-3);
    assert!((gini_from_copula(&EvCopula::new(a.clone())).unwrap() - g).abs() < 5e-3);
    let spec = spectral_from_w(&out.williamson, out.williamson.x());
    assert!((spec.first_moment() - 1.0).abs() < 1e-3);
    let mass = integrate_unit(|z| h_density(a, z));
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    let (w, _, _) = out.williamson.eval(0.5);
    assert!((a.value(0.5 * (1.5 - w)) - 0.5 * (1.5 + w)).abs() < 1e-9);
}

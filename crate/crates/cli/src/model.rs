//! Model files: fitted spline models or parametric families.

use std::path::Path;
use std::sync::Arc;

use evcop_core::copula::{gini_from_copula, EvCopula};
use evcop_core::families::{Family, ParametricPickands};
use evcop_core::fit::FittedModel;
use evcop_core::pickands::{
    blomqvist_beta, gini_from_density, gini_from_pickands, h_density, rotate_inverse, spectral_from_w,
    upper_tail, PickandsFunction,
};
use evcop_core::pipeline::refined_nodes;
use evcop_core::quadrature::{integrate_unit, linspace};
use evcop_core::williamson::{fixed_point, WilliamsonFunction};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A parametric family in a model file, recognized by its `family` key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricSpec {
    pub family: Family,
    pub theta: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub survival: bool,
}

fn one() -> f64 {
    1.0
}

impl ParametricSpec {
    pub fn pickands(&self) -> CliResult<ParametricPickands> {
        if self.alpha == 1.0 && self.beta == 1.0 {
            Ok(ParametricPickands::new(self.family, self.theta)?)
        } else {
            Ok(ParametricPickands::with_asymmetry(self.family, self.theta, self.alpha, self.beta)?)
        }
    }
}

pub enum LoadedModel {
    Spline(FittedModel),
    Parametric(ParametricSpec, ParametricPickands),
}

impl LoadedModel {
    pub fn from_json(s: &str) -> CliResult<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        if value.get("family").is_some() {
            let spec: ParametricSpec = serde_json::from_value(value)?;
            let p = spec.pickands()?;
            Ok(LoadedModel::Parametric(spec, p))
        } else {
            Ok(LoadedModel::Spline(FittedModel::from_json(s)?))
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn pickands(&self) -> Arc<dyn PickandsFunction> {
        match self {
            LoadedModel::Spline(m) => Arc::new(m.pickands().clone()),
            LoadedModel::Parametric(_, p) => Arc::new(*p),
        }
    }

    pub fn is_survival(&self) -> bool {
        match self {
            LoadedModel::Spline(m) => m.is_survival(),
            LoadedModel::Parametric(s, _) => s.survival,
        }
    }

    pub fn copula(&self) -> EvCopula {
        match self {
            LoadedModel::Spline(m) => m.copula(),
            LoadedModel::Parametric(s, p) => EvCopula::new(*p).with_survival(s.survival),
        }
    }
}

/// Association measures and boundary quantities of the extreme-value part of a model.
#[derive(Debug, Clone, Serialize)]
pub struct Measures {
    pub gini_pickands: f64,
    pub gini_density: f64,
    pub gini_copula: f64,
    pub blomqvist_beta: f64,
    pub upper_tail: f64,
    pub fixed_point: f64,
    pub slope_at_0: f64,
    pub slope_at_1: f64,
    pub spectral_h0: f64,
    pub spectral_h1: f64,
    pub survival: bool,
}

pub fn measures(model: &LoadedModel) -> CliResult<Measures> {
    let a = model.pickands();
    let evc = EvCopula::from_arc(a.clone());
    let (gini_density, fixed, h0, h1) = match model {
        LoadedModel::Spline(m) => {
            let w = m.williamson();
            let spec = spectral_from_w(w, w.x());
            let (h0, h1) = match (m.is_symmetrized(), m.flipped()) {
                (true, _) => (0.5 * (spec.h0 + spec.h1), 0.5 * (spec.h0 + spec.h1)),
                (false, true) => (spec.h1, spec.h0),
                (false, false) => (spec.h0, spec.h1),
            };
            (gini_from_density(|x| m.density().pdf(x)), fixed_point(w)?, h0, h1)
        }
        LoadedModel::Parametric(_, p) => {
            let w = rotate_inverse(*p)?;
            let nodes = refined_nodes(&linspace(0.0, 1.0, 257));
            let spec = spectral_from_w(&w, &nodes);
            // x W'' omits the atom at 1, which carries weight x = 1 and so adds nothing to (1 − x) f.
            let gini = integrate_unit(|x| (1.0 - x) * x * w.eval(x).2);
            (gini, fixed_point(&w)?, spec.h0, spec.h1)
        }
    };
    Ok(Measures {
        gini_pickands: gini_from_pickands(&a),
        gini_density,
        gini_copula: gini_from_copula(&evc)?,
        blomqvist_beta: blomqvist_beta(&a),
        upper_tail: upper_tail(&a),
        fixed_point: fixed,
        slope_at_0: a.eval(0.0).1,
        slope_at_1: a.eval(1.0).1,
        spectral_h0: h0,
        spectral_h1: h1,
        survival: model.is_survival(),
    })
}

/// Rows `(t, A, A', A'', h)` on `points` equispaced values of `t`.
pub fn pickands_table(a: &dyn PickandsFunction, points: usize) -> Vec<[f64; 5]> {
    linspace(0.0, 1.0, points.max(2))
        .into_iter()
        .map(|t| {
            let (v, d1, d2) = a.eval(t);
            [t, v, d1, d2, h_density(a, t)]
        })
        .collect()
}

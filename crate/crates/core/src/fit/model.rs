//! Fitted models and their JSON representation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bayes::ClrDensity;
use crate::copula::EvCopula;
use crate::error::{Error, Result};
use crate::pickands::PickandsModel;
use crate::splinebasis::{KnotConfig, ZBasis};
use crate::williamson::WilliamsonGrid;

use super::pipeline_with_retry;

/// Current version of the model file format.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub loglik: f64,
    pub penalty: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Serialized form of a [`FittedModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub degree: usize,
    pub knots: Vec<f64>,
    pub theta: Vec<f64>,
    pub center_applied: bool,
    pub flipped: bool,
    pub lambda: f64,
    #[serde(default)]
    pub survival: bool,
    #[serde(default)]
    pub symmetrized: bool,
    #[serde(default = "default_true")]
    pub normalize_w: bool,
    pub diagnostics: FitDiagnostics,
}

fn default_true() -> bool {
    true
}

/// Spline coefficients together with the Pickands function they produce.
#[derive(Debug, Clone)]
pub struct FittedModel {
    theta: Vec<f64>,
    basis: Arc<ZBasis>,
    center_applied: bool,
    flipped: bool,
    lambda: f64,
    normalize_w: bool,
    survival: bool,
    symmetrized: bool,
    diagnostics: FitDiagnostics,
    density: Arc<ClrDensity>,
    williamson: Arc<WilliamsonGrid>,
    pickands: Arc<PickandsModel>,
}

impl FittedModel {
    /// Runs the pipeline for `theta` and mirrors the result when `flipped`.
    pub fn assemble(
        basis: Arc<ZBasis>,
        theta: Vec<f64>,
        center_applied: bool,
        flipped: bool,
        lambda: f64,
        normalize_w: bool,
        diagnostics: FitDiagnostics,
    ) -> Result<Self> {
        let out = pipeline_with_retry(basis.clone(), &theta, center_applied, normalize_w)?;
        let pickands = if flipped { out.pickands.mirrored() } else { out.pickands };
        Ok(Self {
            theta,
            basis,
            center_applied,
            flipped,
            lambda,
            normalize_w,
            survival: false,
            symmetrized: false,
            diagnostics,
            density: Arc::new(out.density),
            williamson: Arc::new(out.williamson),
            pickands: Arc::new(pickands),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn basis(&self) -> &Arc<ZBasis> {
        &self.basis
    }

    pub fn center_applied(&self) -> bool {
        self.center_applied
    }

    pub fn flipped(&self) -> bool {
        self.flipped
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn loglik(&self) -> f64 {
        self.diagnostics.loglik
    }

    pub fn penalty(&self) -> f64 {
        self.diagnostics.penalty
    }

    /// Whether the model describes the survival copula of the fitted function.
    pub fn is_survival(&self) -> bool {
        self.survival
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// The fitted clr density, in the orientation used for fitting (before mirroring).
    pub fn density(&self) -> &ClrDensity {
        &self.density
    }

    /// Williamson transform of [`FittedModel::density`].
    pub fn williamson(&self) -> &WilliamsonGrid {
        &self.williamson
    }

    /// The final Pickands function (mirrored back and symmetrized as recorded).
    pub fn pickands(&self) -> &PickandsModel {
        &self.pickands
    }

    pub fn with_survival(mut self, survival: bool) -> Self {
        self.survival = survival;
        self
    }

    /// Replaces the Pickands function by `(A(t) + A(1 − t)) / 2`.
    pub fn symmetrized(mut self) -> Self {
        if !self.symmetrized {
            self.pickands = Arc::new(self.pickands.symmetrized());
            self.symmetrized = true;
        }
        self
    }

    pub fn copula(&self) -> EvCopula {
        EvCopula::from_arc(self.pickands.clone()).with_survival(self.survival)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION,
            degree: self.basis.degree(),
            knots: self.basis.interior_knots().to_vec(),
            theta: self.theta.clone(),
            center_applied: self.center_applied,
            flipped: self.flipped,
            lambda: self.lambda,
            survival: self.survival,
            symmetrized: self.symmetrized,
            normalize_w: self.normalize_w,
            diagnostics: self.diagnostics,
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        if file.version != MODEL_VERSION {
            return Err(Error::invalid(format!("unsupported model version {}", file.version)));
        }
        let basis = Arc::new(ZBasis::new(KnotConfig::new(file.knots.clone(), file.degree)?)?);
        let model = Self::assemble(
            basis,
            file.theta.clone(),
            file.center_applied,
            file.flipped,
            file.lambda,
            file.normalize_w,
            file.diagnostics,
        )?
        .with_survival(file.survival);
        Ok(if file.symmetrized { model.symmetrized() } else { model })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }
}

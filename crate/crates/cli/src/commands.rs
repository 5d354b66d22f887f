//! The fit, simulate and evaluate commands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use evcop_core::fit::{fit_copula, FittedModel};
use evcop_core::pickands::{blomqvist_beta, gini_from_pickands, upper_tail};
use serde::Serialize;

use crate::dataset::{read_pairs_file, write_pairs, Dataset};
use crate::error::{CliError, CliResult};
use crate::model::{measures, pickands_table, LoadedModel};
use crate::{EvaluateArgs, FitArgs, FitOptions, SimulateArgs};

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub n: usize,
    pub loglik: f64,
    pub penalty: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flipped: bool,
    pub survival: bool,
    pub gini: f64,
    pub blomqvist_beta: f64,
    pub upper_tail: f64,
}

impl FitReport {
    pub fn new(model: &FittedModel, n: usize) -> Self {
        let a = model.pickands();
        let d = model.diagnostics();
        Self {
            n,
            loglik: d.loglik,
            penalty: d.penalty,
            iterations: d.iterations,
            converged: d.converged,
            flipped: model.flipped(),
            survival: model.is_survival(),
            gini: gini_from_pickands(a),
            blomqvist_beta: blomqvist_beta(a),
            upper_tail: upper_tail(a),
        }
    }
}

/// Fits pseudo-observations; with `survival` the copula of `(1 − U, 1 − V)` is
/// fitted and the model is marked as its survival copula.
pub fn fit_dataset(data: &Dataset, survival: bool, opts: &FitOptions) -> CliResult<FittedModel> {
    let data = if survival { data.survival() } else { data.clone() };
    Ok(fit_copula(&data.rows, &opts.config())?.with_survival(survival))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let raw = Dataset::raw(read_pairs_file(&args.input)?);
    if raw.rows.len() < evcop_core::fit::MIN_SAMPLE {
        return Err(CliError::input(format!(
            "need at least {} rows, found {}",
            evcop_core::fit::MIN_SAMPLE,
            raw.rows.len()
        )));
    }
    let data = if args.pseudo { raw.pseudo_observations() } else { raw.as_pseudo()? };
    let model = fit_dataset(&data, args.survival, &args.fit)?;
    std::fs::write(&args.output, model.to_json()? + "\n")?;
    let report = FitReport::new(&model, data.rows.len());
    if let Some(p) = &args.report {
        write_json(Some(p), &report)?;
    }
    write_json(None, &report)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let model = LoadedModel::load(&args.model)?;
    let rows = model.copula().simulate(args.n, args.seed)?;
    match &args.output {
        Some(p) => write_pairs(create(p)?, ("u", "v"), &rows),
        None => write_pairs(io::stdout().lock(), ("u", "v"), &rows),
    }
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let model = LoadedModel::load(&args.model)?;
    if let Some(p) = &args.table {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(["t", "A", "dA", "d2A", "h"])?;
        for row in pickands_table(model.pickands().as_ref(), args.points) {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    let m = measures(&model)?;
    write_json(args.output.as_deref(), &m)?;
    io::stdout().flush()?;
    Ok(())
}

//! Joint model for ordered pairs `(max, min)` of exchangeable quantities:
//! a shared margin density and a symmetric survival extreme-value copula.

use evcop_core::fit::{fit_univariate_density, UnivariateConfig, UnivariateFit};
use evcop_core::pickands::PickandsFunction;
use serde::Serialize;

use crate::commands::{create, fit_dataset, write_json, FitReport};
use crate::dataset::{read_pairs_file, scaled_ranks, write_pairs, DataKind, Dataset};
use crate::error::{CliError, CliResult};
use crate::JointArgs;

/// Both orderings of every row, which makes the sample exchangeable.
pub fn duplicate(rows: &[(f64, f64)]) -> Vec<(f64, f64)> {
    rows.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

/// Pseudo-observations from the pooled ranks of both columns.
pub fn pooled_pseudo(rows: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let pooled: Vec<f64> = rows.iter().flat_map(|&(a, b)| [a, b]).collect();
    let r = scaled_ranks(&pooled);
    r.chunks(2).map(|c| (c[0], c[1])).collect()
}

#[derive(Debug, Serialize)]
struct JointReport {
    rows: usize,
    duplicated_rows: usize,
    margin_loglik: f64,
    margin_converged: bool,
    copula: FitReport,
    max_asymmetry: f64,
    draws: usize,
}

pub fn run(args: &JointArgs) -> CliResult<()> {
    let rows = read_pairs_file(&args.input)?;
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.0 < r.1) {
        return Err(CliError::input(format!("row {}: first column {} is below the second {}", i + 1, r.0, r.1)));
    }
    if rows.iter().any(|r| !(r.0 < args.upper && r.1 > args.lower)) {
        return Err(CliError::input(format!("values must lie inside ({}, {})", args.lower, args.upper)));
    }
    std::fs::create_dir_all(&args.output_dir)?;
    let dup = duplicate(&rows);
    let pooled: Vec<f64> = dup.iter().map(|r| r.0).collect();
    let margin_cfg = UnivariateConfig { dim: args.margin_dim, lambda: args.margin_lambda, ..Default::default() };
    let margin = fit_univariate_density(&pooled, (args.lower, args.upper), &margin_cfg)?;
    write_json(Some(&args.output_dir.join("margin.json")), &margin.to_file())?;

    let data = Dataset { rows: pooled_pseudo(&dup), kind: DataKind::Pseudo };
    let model = fit_dataset(&data, true, &args.fit)?.symmetrized();
    std::fs::write(args.output_dir.join("copula.json"), model.to_json()? + "\n")?;

    let copula = model.copula();
    let draws = copula.simulate(args.n, args.fit.seed)?;
    let joint: Vec<(f64, f64)> = draws
        .iter()
        .map(|&(u, v)| {
            let (x, y) = (margin.quantile(u), margin.quantile(v));
            (x.max(y), x.min(y))
        })
        .collect();
    write_pairs(create(&args.output_dir.join("joint.csv"))?, ("m1", "m2"), &joint)?;
    if args.density_grid > 0 {
        write_density(args, &margin, &copula)?;
    }

    let a = model.pickands();
    let max_asymmetry = (0..=1000)
        .map(|k| {
            let t = k as f64 / 1000.0;
            (a.value(t) - a.value(1.0 - t)).abs()
        })
        .fold(0.0, f64::max);
    let report = JointReport {
        rows: rows.len(),
        duplicated_rows: dup.len(),
        margin_loglik: margin.loglik(),
        margin_converged: margin.converged(),
        copula: FitReport::new(&model, dup.len()),
        max_asymmetry,
        draws: joint.len(),
    };
    write_json(Some(&args.output_dir.join("report.json")), &report)?;
    write_json(None, &report)
}

/// Density of the exchangeable pair, `c(F(x), F(y)) f(x) f(y)`, at grid midpoints.
fn write_density(args: &JointArgs, margin: &UnivariateFit, copula: &evcop_core::copula::EvCopula) -> CliResult<()> {
    let n = args.density_grid;
    let h = (args.upper - args.lower) / n as f64;
    let mids: Vec<f64> = (0..n).map(|i| args.lower + (i as f64 + 0.5) * h).collect();
    let cache: Vec<(f64, f64)> = mids.iter().map(|&x| (margin.cdf(x), margin.pdf(x))).collect();
    let mut w = csv::Writer::from_writer(create(&args.output_dir.join("density.csv"))?);
    w.write_record(["x", "y", "pdf"])?;
    for (i, &x) in mids.iter().enumerate() {
        for (j, &y) in mids.iter().enumerate() {
            let (fx, px) = cache[i];
            let (fy, py) = cache[j];
            let c = copula.pdf(fx.clamp(1e-12, 1.0 - 1e-12), fy.clamp(1e-12, 1.0 - 1e-12));
            w.write_record([x.to_string(), y.to_string(), (c * px * py).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

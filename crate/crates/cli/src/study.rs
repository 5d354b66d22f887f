//! Simulation studies: pointwise envelopes of fitted Pickands functions and
//! total-variation summaries over random extreme-value copulas.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use evcop_core::copula::{tvd_copulas, EvCopula};
use evcop_core::fit::{fit_copula, random_pickands, FitConfig};
use evcop_core::pickands::{blomqvist_beta, gini_from_pickands, PickandsFunction};
use evcop_core::quadrature::linspace;
use evcop_core::splinebasis::{quantile_sorted, KnotConfig, ZBasis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::create;
use crate::error::{CliError, CliResult};
use crate::model::ParametricSpec;
use crate::StudyArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    BiasVariance,
    Tvd,
}

/// A parametric ground truth with an optional penalty override.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FamilyEntry {
    #[serde(flatten)]
    pub spec: ParametricSpec,
    pub lambda: Option<f64>,
}

/// Random ground truths drawn from the truncated curvature prior.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RandomEntry {
    #[serde(default = "default_prior_lambda")]
    pub lambda: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub count: usize,
}

fn default_prior_lambda() -> f64 {
    1e-4
}

fn default_radius() -> f64 {
    5.0
}

fn default_dim() -> usize {
    13
}

fn default_t_points() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: StudyKind,
    #[serde(default)]
    pub families: Vec<FamilyEntry>,
    pub random: Option<RandomEntry>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
}

impl StudySpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.replications == 0 {
            return Err(CliError::input("replications must be at least 1"));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 50) {
            return Err(CliError::input("sample sizes must be at least 50"));
        }
        if self.families.is_empty() && self.random.is_none_or(|r| r.count == 0) {
            return Err(CliError::input("study needs families or a random block"));
        }
        if self.t_points < 2 {
            return Err(CliError::input("t_points must be at least 2"));
        }
        self.fit.validate()?;
        Ok(())
    }
}

struct Truth {
    id: String,
    pickands: Arc<dyn PickandsFunction>,
    lambda: Option<f64>,
}

fn truths(spec: &StudySpec) -> CliResult<Vec<Truth>> {
    let mut out = Vec::new();
    for f in &spec.families {
        let s = f.spec;
        out.push(Truth {
            id: format!("{}-{}-{}-{}", s.family.name(), s.theta, s.alpha, s.beta),
            pickands: Arc::new(s.pickands()?),
            lambda: f.lambda,
        });
    }
    if let Some(r) = spec.random {
        if r.dim < 4 {
            return Err(CliError::input("random dim must be at least 4"));
        }
        let basis = Arc::new(ZBasis::new(KnotConfig::uniform(r.dim - 3, 3))?);
        for (i, p) in random_pickands(r.lambda, r.radius, r.count, spec.seed, basis)?.into_iter().enumerate() {
            out.push(Truth { id: format!("random-{i:03}"), pickands: Arc::new(p.pickands), lambda: None });
        }
    }
    Ok(out)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one run, independent of scheduling order.
pub fn run_seed(seed: u64, copula: usize, size: usize, replicate: usize) -> u64 {
    [copula as u64, size as u64, replicate as u64].iter().fold(splitmix64(seed), |acc, &v| splitmix64(acc ^ v))
}

#[derive(Debug, Clone)]
struct RunResult {
    copula: usize,
    size: usize,
    replicate: usize,
    outcome: Result<RunValues, String>,
}

#[derive(Debug, Clone)]
struct RunValues {
    tvd: f64,
    gini: f64,
    beta: f64,
    runtime: f64,
    curve: Vec<f64>,
}

fn one_run(truth: &Truth, spec: &StudySpec, n: usize, seed: u64, t_grid: &[f64]) -> Result<RunValues, String> {
    let start = Instant::now();
    let true_copula = EvCopula::from_arc(truth.pickands.clone());
    let sample = true_copula.simulate(n, seed).map_err(|e| e.to_string())?;
    let mut cfg = spec.fit.clone();
    if let Some(l) = truth.lambda {
        cfg.lambda = l;
    }
    cfg.seed = seed;
    let model = fit_copula(&sample, &cfg).map_err(|e| e.to_string())?;
    let tvd = tvd_copulas(&model.copula(), &true_copula).map_err(|e| e.to_string())?.value;
    let a = model.pickands();
    let curve = t_grid.iter().map(|&t| a.value(t)).collect();
    Ok(RunValues {
        tvd,
        gini: gini_from_pickands(a),
        beta: blomqvist_beta(a),
        runtime: start.elapsed().as_secs_f64(),
        curve,
    })
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EVCOP_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::input(format!("EVCOP_THREADS={v} is not a number")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(e.to_string()))
}

/// Quantile summary of one sample size.
#[derive(Debug, Clone, Serialize)]
pub struct SizeSummary {
    pub sample_size: usize,
    pub runs: usize,
    pub failures: usize,
    pub mean: f64,
    pub q10: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
}

pub fn summarize(size: usize, tvd: &mut [f64], failures: usize) -> SizeSummary {
    tvd.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| if tvd.is_empty() { f64::NAN } else { quantile_sorted(tvd, p) };
    let mean = if tvd.is_empty() { f64::NAN } else { tvd.iter().sum::<f64>() / tvd.len() as f64 };
    SizeSummary {
        sample_size: size,
        runs: tvd.len(),
        failures,
        mean,
        q10: q(0.1),
        q25: q(0.25),
        q50: q(0.5),
        q75: q(0.75),
        q90: q(0.9),
    }
}

pub fn run(args: &StudyArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: StudySpec = serde_json::from_str(&text)?;
    spec.validate()?;
    std::fs::create_dir_all(&args.output_dir)?;
    let truths = truths(&spec)?;
    let t_grid = linspace(0.0, 1.0, spec.t_points);
    let mut jobs = Vec::new();
    for c in 0..truths.len() {
        for &size in &spec.sample_sizes {
            for r in 0..spec.replications {
                jobs.push((c, size, r));
            }
        }
    }
    log::info!("running {} fits", jobs.len());
    let pool = thread_pool()?;
    let mut results: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, size, replicate)| {
                let seed = run_seed(spec.seed, c, size, replicate);
                let outcome = one_run(&truths[c], &spec, size, seed, &t_grid);
                if let Err(e) = &outcome {
                    log::warn!("{} n={size} replicate {replicate} failed: {e}", truths[c].id);
                }
                RunResult { copula: c, size, replicate, outcome }
            })
            .collect()
    });
    results.sort_by_key(|r| (r.copula, r.size, r.replicate));
    write_results(&args.output_dir, &truths, &results, args.deterministic)?;
    let summaries = write_summary(&args.output_dir, &spec, &results)?;
    print_summary(&summaries);
    if spec.study == StudyKind::BiasVariance {
        write_envelopes(&args.output_dir, &spec, &truths, &results, &t_grid)?;
    }
    Ok(())
}

fn write_results(dir: &Path, truths: &[Truth], results: &[RunResult], deterministic: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(&dir.join("results.csv"))?);
    w.write_record(["copula_id", "sample_size", "replicate", "tvd", "gini", "beta", "runtime_s"])?;
    let mut f = csv::Writer::from_writer(create(&dir.join("failures.csv"))?);
    f.write_record(["copula_id", "sample_size", "replicate", "error"])?;
    for r in results {
        let id = &truths[r.copula].id;
        match &r.outcome {
            Ok(v) => {
                let runtime = if deterministic { 0.0 } else { v.runtime };
                w.write_record([
                    id.clone(),
                    r.size.to_string(),
                    r.replicate.to_string(),
                    v.tvd.to_string(),
                    v.gini.to_string(),
                    v.beta.to_string(),
                    runtime.to_string(),
                ])?;
            }
            Err(e) => f.write_record([id.clone(), r.size.to_string(), r.replicate.to_string(), e.clone()])?,
        }
    }
    w.flush()?;
    f.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, spec: &StudySpec, results: &[RunResult]) -> CliResult<Vec<SizeSummary>> {
    let mut w = csv::Writer::from_writer(create(&dir.join("summary.csv"))?);
    let mut out = Vec::new();
    for &size in &spec.sample_sizes {
        let runs: Vec<&RunResult> = results.iter().filter(|r| r.size == size).collect();
        let mut tvd: Vec<f64> = runs.iter().filter_map(|r| r.outcome.as_ref().ok().map(|v| v.tvd)).collect();
        let failures = runs.len() - tvd.len();
        let s = summarize(size, &mut tvd, failures);
        w.serialize(&s)?;
        out.push(s);
    }
    w.flush()?;
    Ok(out)
}

fn print_summary(s: &[SizeSummary]) {
    println!("{:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}", "size", "mean", "10%", "25%", "50%", "75%", "90%", "fail");
    for r in s {
        println!(
            "{:>8} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {:>6}",
            r.sample_size, r.mean, r.q10, r.q25, r.q50, r.q75, r.q90, r.failures
        );
    }
}

fn write_envelopes(
    dir: &Path,
    spec: &StudySpec,
    truths: &[Truth],
    results: &[RunResult],
    t_grid: &[f64],
) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(&dir.join("envelope.csv"))?);
    w.write_record(["copula_id", "sample_size", "t", "truth", "mean", "q01", "q99"])?;
    let mut cov = csv::Writer::from_writer(create(&dir.join("coverage.csv"))?);
    cov.write_record(["copula_id", "sample_size", "runs", "coverage"])?;
    for (c, truth) in truths.iter().enumerate() {
        for &size in &spec.sample_sizes {
            let curves: Vec<&Vec<f64>> = results
                .iter()
                .filter(|r| r.copula == c && r.size == size)
                .filter_map(|r| r.outcome.as_ref().ok().map(|v| &v.curve))
                .collect();
            if curves.is_empty() {
                continue;
            }
            let mut inside = 0;
            for (k, &t) in t_grid.iter().enumerate() {
                let mut vals: Vec<f64> = curves.iter().map(|c| c[k]).collect();
                vals.sort_by(|a, b| a.total_cmp(b));
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let (lo, hi) = (quantile_sorted(&vals, 0.01), quantile_sorted(&vals, 0.99));
                let a = truth.pickands.value(t);
                if a >= lo - 1e-12 && a <= hi + 1e-12 {
                    inside += 1;
                }
                w.write_record([
                    truth.id.clone(),
                    size.to_string(),
                    t.to_string(),
                    a.to_string(),
                    mean.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                ])?;
            }
            let coverage = inside as f64 / t_grid.len() as f64;
            cov.write_record([truth.id.clone(), size.to_string(), curves.len().to_string(), coverage.to_string()])?;
        }
    }
    w.flush()?;
    cov.flush()?;
    Ok(())
}

//! Random-walk Metropolis sampling with step-size adaptation during burn-in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rand::Rng;

use crate::error::{Error, Result};

/// Fraction of the run discarded as burn-in.
pub const BURN_IN_FRACTION: f64 = 0.2;

/// Iterations between step-size updates.
const ADAPT_WINDOW: usize = 100;

/// Acceptance band targeted while adapting.
const TARGET_ACCEPTANCE: (f64, f64) = (0.2, 0.4);

/// A Metropolis chain with spherical Gaussian proposals.
pub struct Metropolis<F> {
    log_target: F,
    state: Vec<f64>,
    log_p: f64,
    step: f64,
    rng: ChaCha8Rng,
    accepted: usize,
    proposed: usize,
}

impl<F: FnMut(&[f64]) -> f64> Metropolis<F> {
    pub fn new(mut log_target: F, init: &[f64], step: f64, seed: u64) -> Result<Self> {
        let log_p = log_target(init);
        if !log_p.is_finite() {
            return Err(Error::invalid("log target is not finite at the initial point"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("step scale must be positive"));
        }
        Ok(Self {
            log_target,
            state: init.to_vec(),
            log_p,
            step,
            rng: ChaCha8Rng::seed_from_u64(seed),
            accepted: 0,
            proposed: 0,
        })
    }

    /// One proposal; returns whether it was accepted.
    pub fn step(&mut self) -> bool {
        let proposal: Vec<f64> = self
            .state
            .iter()
            .map(|&x| {
                let n: f64 = StandardNormal.sample(&mut self.rng);
                x + self.step * n
            })
            .collect();
        let lp = (self.log_target)(&proposal);
        self.proposed += 1;
        let u: f64 = self.rng.random();
        let accept = lp.is_finite() && (lp >= self.log_p || u.ln() < lp - self.log_p);
        if accept {
            self.state = proposal;
            self.log_p = lp;
            self.accepted += 1;
        }
        accept
    }

    /// Runs `iterations` steps, rescaling the step every 100 iterations
    /// towards an acceptance rate in `[0.2, 0.4]`. Resets the counters.
    pub fn adapt(&mut self, iterations: usize) {
        let mut window = 0;
        for i in 1..=iterations {
            if self.step() {
                window += 1;
            }
            if i % ADAPT_WINDOW == 0 {
                let rate = window as f64 / ADAPT_WINDOW as f64;
                if rate < TARGET_ACCEPTANCE.0 {
                    self.step *= if rate == 0.0 { 0.5 } else { 0.8 };
                } else if rate > TARGET_ACCEPTANCE.1 {
                    self.step *= 1.25;
                }
                window = 0;
            }
        }
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn log_p(&self) -> f64 {
        self.log_p
    }

    pub fn step_scale(&self) -> f64 {
        self.step
    }

    /// Acceptance rate since construction or the last adaptation.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub log_target: Vec<f64>,
    pub acceptance_rate: f64,
    pub step_scale: f64,
}

impl Chain {
    /// The retained state with the largest log target.
    pub fn mode(&self) -> (&[f64], f64) {
        let (i, lp) = self
            .log_target
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        (&self.samples[i], lp)
    }
}

/// Draws `n_samples` retained states after discarding a burn-in of 20% of the run.
pub fn mcmc_sample<F: FnMut(&[f64]) -> f64>(
    log_target: F,
    init: &[f64],
    n_samples: usize,
    seed: u64,
    step_scale: f64,
) -> Result<Chain> {
    let mut chain = Metropolis::new(log_target, init, step_scale, seed)?;
    let burn = ((n_samples as f64) * BURN_IN_FRACTION / (1.0 - BURN_IN_FRACTION)).ceil() as usize;
    chain.adapt(burn);
    let mut samples = Vec::with_capacity(n_samples);
    let mut lps = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        chain.step();
        samples.push(chain.state().to_vec());
        lps.push(chain.log_p());
    }
    if n_samples > 0 && chain.acceptance_rate() == 0.0 {
        return Err(Error::NoConvergence {
            iterations: n_samples,
            reason: "no proposal accepted after adaptation".into(),
        });
    }
    Ok(Chain {
        samples,
        log_target: lps,
        acceptance_rate: chain.acceptance_rate(),
        step_scale: chain.step_scale(),
    })
}

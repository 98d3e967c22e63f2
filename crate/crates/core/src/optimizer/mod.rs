//! Adam ascent with multi-restart driving.
//!
//! Objectives are maximized over unconstrained real parameter vectors; the
//! classical and quantum searches supply reparameterizations that map any
//! real vector onto a valid model.

mod classical;

pub use classical::{
    analytic_classical_gradient, normalize_classical, optimize_classical, ClassicalFit, ClassicalObjective,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iterations over which best-objective improvement is measured for the
/// stopping rule.
pub const CONVERGENCE_WINDOW: usize = 100;

/// Adam hyperparameters and search budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    /// Stop once the best objective improved by less than this over the last
    /// [`CONVERGENCE_WINDOW`] iterations. Zero runs every iteration.
    pub convergence_tol: f64,
    /// Central finite-difference step.
    pub fd_step: f64,
    pub rng_seed: u64,
}

impl AdamConfig {
    /// Classical search defaults: 25 restarts, learning rate 0.005,
    /// convergence tolerance 1e-8.
    pub fn classical() -> Self {
        Self {
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iterations: 20_000,
            restarts: 25,
            convergence_tol: 1e-8,
            fd_step: 1e-6,
            rng_seed: 0,
        }
    }

    /// Quantum search defaults: 30 restarts of a fixed 5000 iterations,
    /// learning rate 0.003, finite-difference step 1e-6.
    pub fn quantum() -> Self {
        Self {
            learning_rate: 0.003,
            max_iterations: 5000,
            restarts: 30,
            convergence_tol: 0.0,
            ..Self::classical()
        }
    }

    /// Cycle-probability fits in the multicyclic survey: few logistic
    /// parameters, so a larger step and a tight tolerance.
    pub fn gmcm() -> Self {
        Self {
            learning_rate: 0.05,
            max_iterations: 3000,
            restarts: 4,
            convergence_tol: 1e-12,
            ..Self::classical()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("epsilon", self.epsilon),
            ("fd_step", self.fd_step),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::OutOfRange(format!("{name} must be positive, got {v}")));
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::OutOfRange("beta1 and beta2 must be below 1".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::OutOfRange("convergence_tol must be non-negative".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::OutOfRange("restarts and max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::classical()
    }
}

/// A function to maximize. The default gradient is central finite
/// differences.
pub trait Objective: Sync {
    fn arity(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn value_and_gradient(&self, x: &[f64], fd_step: f64) -> Result<(f64, Vec<f64>)> {
        let f = self.value(x);
        let g = finite_diff_gradient(|y| self.value(y), x, fd_step)?;
        Ok((f, g))
    }
}

/// Wraps a plain closure as an [`Objective`] with finite-difference gradients.
pub struct FnObjective<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(arity: usize, f: F) -> Self {
        Self { arity, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Component-wise central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::OutOfRange(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("finite-difference gradient component {i}")));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Result of a single Adam run, or the best of several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub best_value: f64,
    pub best_params: Vec<f64>,
    pub iterations_used: usize,
    pub restart_index: usize,
    pub converged: bool,
}

/// Bias-corrected Adam ascent from `init`.
pub fn adam_maximize<O: Objective + ?Sized>(
    objective: &O,
    init: Vec<f64>,
    config: &AdamConfig,
) -> Result<OptimizationOutcome> {
    config.validate()?;
    if init.len() != objective.arity() {
        return Err(Error::DimensionMismatch(format!(
            "objective takes {} parameters, init has {}",
            objective.arity(),
            init.len()
        )));
    }
    let n = init.len();
    let mut x = init;
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let (mut b1t, mut b2t) = (1.0, 1.0);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_params = x.clone();
    let mut history = Vec::with_capacity(config.max_iterations.min(1 << 16));
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..config.max_iterations {
        iterations = it + 1;
        let (f, g) = objective.value_and_gradient(&x, config.fd_step)?;
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("objective at iteration {iterations}")));
        }
        if let Some(i) = g.iter().position(|gi| !gi.is_finite()) {
            return Err(Error::NonFinite(format!("gradient component {i} at iteration {iterations}")));
        }
        if f > best_value {
            best_value = f;
            best_params.copy_from_slice(&x);
        }
        history.push(best_value);
        if it >= CONVERGENCE_WINDOW && best_value - history[it - CONVERGENCE_WINDOW] < config.convergence_tol {
            converged = true;
            break;
        }
        b1t *= config.beta1;
        b2t *= config.beta2;
        for i in 0..n {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = m[i] / (1.0 - b1t);
            let v_hat = v[i] / (1.0 - b2t);
            x[i] += config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }

    Ok(OptimizationOutcome { best_value, best_params, iterations_used: iterations, restart_index: 0, converged })
}

/// Independent, reproducible generator for one restart.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Entries uniform on `[-1, 1]`.
pub fn uniform_init(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartFailure {
    pub restart_index: usize,
    pub reason: String,
}

/// Best outcome over all restarts plus per-restart bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartOutcome {
    pub best: OptimizationOutcome,
    /// Final value of each successful restart, in restart order.
    pub restart_values: Vec<(usize, f64)>,
    /// Running maximum over restarts in index order.
    pub best_so_far: Vec<f64>,
    pub failures: Vec<RestartFailure>,
    pub total_iterations: usize,
}

impl MultiStartOutcome {
    pub fn restarts_used(&self) -> usize {
        self.restart_values.len()
    }
}

/// Runs `config.restarts` independent ascents in parallel. Restart `r` draws
/// its initial point from [`restart_rng`]`(seed, r)`. The merge keeps the
/// highest value, ties going to the lowest restart index, so the result does
/// not depend on scheduling.
pub fn maximize_with_restarts<O, I>(objective: &O, init: I, config: &AdamConfig) -> Result<MultiStartOutcome>
where
    O: Objective + ?Sized,
    I: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    config.validate()?;
    let runs: Vec<Result<OptimizationOutcome>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(config.rng_seed, r);
            adam_maximize(objective, init(&mut rng), config).map(|mut o| {
                o.restart_index = r;
                o
            })
        })
        .collect();

    let mut best: Option<OptimizationOutcome> = None;
    let mut restart_values = Vec::new();
    let mut best_so_far = Vec::new();
    let mut failures = Vec::new();
    let mut total_iterations = 0;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(o) => {
                total_iterations += o.iterations_used;
                restart_values.push((r, o.best_value));
                if best.as_ref().is_none_or(|b| o.best_value > b.best_value) {
                    best = Some(o);
                }
                best_so_far.push(best.as_ref().map(|b| b.best_value).unwrap_or(f64::NEG_INFINITY));
            }
            Err(e) => failures.push(RestartFailure { restart_index: r, reason: e.to_string() }),
        }
    }
    match best {
        Some(best) => Ok(MultiStartOutcome { best, restart_values, best_so_far, failures, total_iterations }),
        None => Err(Error::NonFinite(format!(
            "all {} restarts failed; first: {}",
            config.restarts,
            failures.first().map(|f| f.reason.as_str()).unwrap_or("unknown")
        ))),
    }
}

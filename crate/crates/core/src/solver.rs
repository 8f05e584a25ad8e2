//! Cyclic coordinate descent for the L1-penalized NB2 objective.
//!
//! One sweep visits every coefficient in index order. Each visit takes a
//! gradient step of size `eta` on that coefficient and soft-thresholds the
//! result; the sweep ends with an unpenalized gradient step on `ln α`.
//!
//! The objective is taken per observation, `L / n + λ ‖β‖₁`, so a given
//! `eta` and `λ` mean the same thing whatever the sample size.

use serde::{Deserialize, Serialize};

use crate::data::{ColumnScaling, Dataset};
use crate::error::{Error, Result};
use crate::model::{
    clamp_linear_predictor, obs_neg_loglik_kernel, obs_score_log_alpha, NBParams, PenaltySet,
};
use crate::special::ln_factorial;

/// Lower bound on `α` during the log-space updates.
pub const ALPHA_FLOOR: f64 = 1e-10;
/// Upper bound on `α` during the log-space updates.
pub const ALPHA_CEILING: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Step size for both the coefficient and the `ln α` updates.
    pub eta: f64,
    pub max_iters: usize,
    /// Stop once a sweep changes the objective by less than `tol` relative.
    pub tol: f64,
    pub penalized: PenaltySet,
    /// Unused by the cyclic solver; kept so option files round-trip.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eta: 0.002,
            max_iters: 5000,
            tol: 1e-8,
            penalized: PenaltySet::All,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidInput(format!("eta must be positive, got {}", self.eta)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidInput(format!("tol must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    /// Per-observation penalized objective at the start and after each sweep.
    pub objective_trace: Vec<f64>,
    pub iters_run: usize,
    pub converged: bool,
    /// Number of times a linear predictor hit the exponentiation cap.
    pub clamp_events: u64,
    pub column_names: Vec<String>,
    pub scaling: Vec<ColumnScaling>,
}

impl FitResult {
    pub fn params(&self) -> NBParams {
        NBParams {
            beta: self.beta.clone(),
            alpha: self.alpha,
        }
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting objective")
    }

    pub fn zero_count(&self) -> usize {
        self.beta.iter().filter(|b| **b == 0.0).count()
    }
}

/// One thresholded coordinate update: with `v = beta_i - eta * grad_i`,
/// returns `v - eta*lambda` above the threshold, `v + eta*lambda` below its
/// negative, and exactly `0.0` in between.
pub fn soft_threshold_step(beta_i: f64, grad_i: f64, eta: f64, lambda: f64) -> Result<f64> {
    if !beta_i.is_finite() || !grad_i.is_finite() || !eta.is_finite() || !lambda.is_finite() {
        return Err(Error::InvalidInput("soft-threshold step needs finite inputs".into()));
    }
    if !(eta > 0.0) || lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "soft-threshold step needs eta > 0 and lambda >= 0, got eta = {eta}, lambda = {lambda}"
        )));
    }
    let v = beta_i - eta * grad_i;
    let t = eta * lambda;
    Ok(if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    })
}

/// Working state of a fit: raw linear predictors and the clamped means.
struct State<'a> {
    data: &'a Dataset,
    y: Vec<f64>,
    eta: Vec<f64>,
    mu: Vec<f64>,
    ln_factorials: f64,
    clamp_events: u64,
}

impl<'a> State<'a> {
    fn new(data: &'a Dataset, beta: &[f64]) -> Self {
        let n = data.n();
        let mut eta = vec![0.0; n];
        for (i, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, x) in eta.iter_mut().zip(data.column(i)) {
                    *e += x * b;
                }
            }
        }
        let mut clamp_events = 0;
        let mu = eta
            .iter()
            .map(|&e| {
                let (c, hit) = clamp_linear_predictor(e);
                clamp_events += hit as u64;
                c.exp()
            })
            .collect();
        State {
            data,
            y: data.y().iter().map(|&v| v as f64).collect(),
            eta,
            mu,
            ln_factorials: data.y().iter().map(|&v| ln_factorial(v)).sum(),
            clamp_events,
        }
    }

    /// Mean gradient of the loss with respect to coefficient `i`.
    fn coordinate_gradient(&self, i: usize, alpha: f64) -> f64 {
        let col = self.data.column(i);
        let mut s = 0.0;
        for ((x, y), mu) in col.iter().zip(&self.y).zip(&self.mu) {
            s += x * (y - mu) / (1.0 + alpha * mu);
        }
        -s / self.y.len() as f64
    }

    fn shift(&mut self, i: usize, delta: f64) {
        let col = self.data.column(i);
        for ((e, m), x) in self.eta.iter_mut().zip(self.mu.iter_mut()).zip(col) {
            if *x == 0.0 {
                continue;
            }
            *e += x * delta;
            let (c, hit) = clamp_linear_predictor(*e);
            self.clamp_events += hit as u64;
            *m = c.exp();
        }
    }

    fn log_alpha_gradient(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .data
            .y()
            .iter()
            .zip(&self.mu)
            .map(|(&y, &mu)| obs_score_log_alpha(y, mu, alpha))
            .sum();
        -s / self.y.len() as f64
    }

    fn mean_loss(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .data
            .y()
            .iter()
            .zip(&self.eta)
            .zip(&self.mu)
            .map(|((&y, &e), &mu)| obs_neg_loglik_kernel(y, clamp_linear_predictor(e).0, mu, alpha))
            .sum();
        (s + self.ln_factorials) / self.y.len() as f64
    }
}

/// Fits the penalized model at one `lambda`, starting from `init` or from
/// `β = 1`, `α = 1`.
pub fn fit(data: &Dataset, lambda: f64, opts: &SolverOptions, init: Option<&NBParams>) -> Result<FitResult> {
    opts.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    let p = data.p();
    let start = match init {
        Some(params) => {
            if params.beta.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "initial coefficients",
                    expected: p,
                    found: params.beta.len(),
                });
            }
            NBParams::new(params.beta.clone(), params.alpha)?
        }
        None => NBParams::ones(p),
    };
    let (ln_floor, ln_ceiling) = (ALPHA_FLOOR.ln(), ALPHA_CEILING.ln());
    let penalties: Vec<f64> = (0..p)
        .map(|i| if opts.penalized.contains(i) { lambda } else { 0.0 })
        .collect();
    let l1 = |beta: &[f64]| -> f64 { beta.iter().zip(&penalties).map(|(b, l)| l * b.abs()).sum() };

    let mut beta = start.beta;
    let mut log_alpha = start.alpha.ln().clamp(ln_floor, ln_ceiling);
    let mut state = State::new(data, &beta);

    let initial = state.mean_loss(log_alpha.exp()) + l1(&beta);
    if !initial.is_finite() {
        return Err(Error::Diverged { iteration: 0, coordinate: 0 });
    }
    let mut trace = vec![initial];
    let mut converged = false;

    for iteration in 1..=opts.max_iters {
        let alpha = log_alpha.exp();
        for i in 0..p {
            let grad = state.coordinate_gradient(i, alpha);
            if !grad.is_finite() {
                return Err(Error::Diverged { iteration, coordinate: i });
            }
            let updated = soft_threshold_step(beta[i], grad, opts.eta, penalties[i])?;
            let delta = updated - beta[i];
            if delta != 0.0 {
                state.shift(i, delta);
            }
            beta[i] = updated;
        }

        let grad_alpha = state.log_alpha_gradient(alpha);
        if !grad_alpha.is_finite() {
            return Err(Error::Diverged { iteration, coordinate: p });
        }
        log_alpha = (log_alpha - opts.eta * grad_alpha).clamp(ln_floor, ln_ceiling);

        let objective = state.mean_loss(log_alpha.exp()) + l1(&beta);
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration, coordinate: p });
        }
        let previous = *trace.last().unwrap();
        trace.push(objective);
        let change = (previous - objective).abs();
        if change == 0.0 || change < opts.tol * previous.abs() {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta,
        alpha: log_alpha.exp(),
        lambda,
        iters_run: trace.len() - 1,
        objective_trace: trace,
        converged,
        clamp_events: state.clamp_events,
        column_names: data.column_names().to_vec(),
        scaling: data.scaling().to_vec(),
    })
}

/// Fits a strictly descending grid of penalties, warm-starting each fit
/// from the previous solution.
pub fn fit_path(data: &Dataset, lambdas: &[f64], opts: &SolverOptions) -> Result<Vec<FitResult>> {
    check_grid(lambdas)?;
    let mut fits: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    for (index, &lambda) in lambdas.iter().enumerate() {
        let init = fits.last().map(FitResult::params);
        let result = fit(data, lambda, opts, init.as_ref()).map_err(|e| Error::Path {
            index,
            lambda,
            source: Box::new(e),
        })?;
        fits.push(result);
    }
    Ok(fits)
}

pub(crate) fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("lambda grid must be finite and non-negative".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly descending".into()));
    }
    Ok(())
}

//! NB2 negative binomial likelihood with a log link.
//!
//! With `m = 1/α` and `p_j = 1/(1 + α μ_j)`, the loss is the negative
//! log-likelihood
//!
//! ```text
//! L = -Σ_j [ ln Γ(m + y_j) - ln Γ(y_j + 1) - ln Γ(m) + m ln p_j + y_j ln(1 - p_j) ]
//! ```
//!
//! Its derivatives are
//!
//! ```text
//! ∂L/∂β_i    = -Σ_j x_ji (y_j - μ_j) / (1 + α μ_j)
//! ∂L/∂ln α   = -Σ_j [ (ψ(m) - ψ(m + y_j) + ln(1 + α μ_j)) / α + (y_j - μ_j) / (1 + α μ_j) ]
//! ```

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::special::{digamma_shift, ln_factorial, ln_gamma_shift};

/// Linear predictors are clamped to `[-CAP, CAP]` before exponentiation.
pub const LINEAR_PREDICTOR_CAP: f64 = 500.0;

/// Coefficients and over-dispersion of an NB2 model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBParams {
    pub beta: Vec<f64>,
    pub alpha: f64,
}

impl NBParams {
    pub fn new(beta: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be positive and finite, got {alpha}")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta must be finite".into()));
        }
        Ok(NBParams { beta, alpha })
    }

    /// `β = 1`, `α = 1`.
    pub fn ones(p: usize) -> Self {
        NBParams {
            beta: vec![1.0; p],
            alpha: 1.0,
        }
    }
}

/// Which coefficients carry the L1 penalty. `α` is never penalized.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySet {
    #[default]
    All,
    AllButIntercept,
    Columns(Vec<usize>),
}

impl PenaltySet {
    pub fn contains(&self, i: usize) -> bool {
        match self {
            PenaltySet::All => true,
            PenaltySet::AllButIntercept => i != 0,
            PenaltySet::Columns(cols) => cols.contains(&i),
        }
    }

    pub fn l1_norm(&self, beta: &[f64]) -> f64 {
        beta.iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, b)| b.abs())
            .sum()
    }
}

/// Clamps a linear predictor to the exponentiation cap; the flag reports
/// whether clamping happened.
pub fn clamp_linear_predictor(eta: f64) -> (f64, bool) {
    if eta > LINEAR_PREDICTOR_CAP {
        (LINEAR_PREDICTOR_CAP, true)
    } else if eta < -LINEAR_PREDICTOR_CAP {
        (-LINEAR_PREDICTOR_CAP, true)
    } else {
        (eta, false)
    }
}

/// `μ = exp(x·β)`, with the linear predictor clamped to `±500`.
pub fn link_mu(x_row: &[f64], beta: &[f64]) -> Result<f64> {
    if x_row.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            context: "link_mu",
            expected: beta.len(),
            found: x_row.len(),
        });
    }
    if x_row.iter().chain(beta).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("link_mu requires finite inputs".into()));
    }
    let eta: f64 = x_row.iter().zip(beta).map(|(x, b)| x * b).sum();
    Ok(clamp_linear_predictor(eta).0.exp())
}

/// Negative log-likelihood of one observation given its (clamped) linear
/// predictor `eta` and `mu = exp(eta)`.
pub(crate) fn obs_neg_loglik(y: u64, eta: f64, mu: f64, alpha: f64) -> f64 {
    obs_neg_loglik_kernel(y, eta, mu, alpha) + ln_factorial(y)
}

/// [`obs_neg_loglik`] without the parameter-free `ln Γ(y + 1)` term.
pub(crate) fn obs_neg_loglik_kernel(y: u64, eta: f64, mu: f64, alpha: f64) -> f64 {
    let m = 1.0 / alpha;
    let log1p_am = (alpha * mu).ln_1p();
    let mut ll = ln_gamma_shift(m, y) - m * log1p_am;
    if y > 0 {
        // y ln(1 - p) = y (ln α + η - ln(1 + αμ))
        ll += y as f64 * (alpha.ln() + eta - log1p_am);
    }
    -ll
}

/// `∂ℓ_j/∂η_j` for the log-likelihood of one observation.
#[inline]
pub(crate) fn obs_score_eta(y: f64, mu: f64, alpha: f64) -> f64 {
    (y - mu) / (1.0 + alpha * mu)
}

/// `∂ℓ_j/∂ln α` for the log-likelihood of one observation.
pub(crate) fn obs_score_log_alpha(y: u64, mu: f64, alpha: f64) -> f64 {
    let m = 1.0 / alpha;
    let am = alpha * mu;
    (am.ln_1p() - digamma_shift(m, y)) * m + (y as f64 - mu) / (1.0 + am)
}

fn check_params(data: &Dataset, params: &NBParams) -> Result<()> {
    if params.beta.len() != data.p() {
        return Err(Error::DimensionMismatch {
            context: "coefficient vector",
            expected: data.p(),
            found: params.beta.len(),
        });
    }
    if !(params.alpha > 0.0) || !params.alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {}", params.alpha)));
    }
    Ok(())
}

/// Clamped linear predictors `x_j·β` for every row.
pub(crate) fn linear_predictors(data: &Dataset, beta: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; data.n()];
    for (i, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (e, x) in eta.iter_mut().zip(data.column(i)) {
            *e += x * b;
        }
    }
    eta.iter_mut().for_each(|e| *e = clamp_linear_predictor(*e).0);
    eta
}

/// Summed negative log-likelihood `L` over all rows.
pub fn nb_neg_loglik(data: &Dataset, params: &NBParams) -> Result<f64> {
    check_params(data, params)?;
    let eta = linear_predictors(data, &params.beta);
    let mut total = 0.0;
    for (j, (&y, &e)) in data.y().iter().zip(&eta).enumerate() {
        let v = obs_neg_loglik(y, e, e.exp(), params.alpha);
        if !v.is_finite() {
            return Err(Error::NonFinite { row: j });
        }
        total += v;
    }
    Ok(total)
}

/// Gradient of `L` with respect to `β`.
pub fn grad_beta(data: &Dataset, params: &NBParams) -> Result<Vec<f64>> {
    check_params(data, params)?;
    let eta = linear_predictors(data, &params.beta);
    let mut scores = Vec::with_capacity(data.n());
    for (j, (&y, &e)) in data.y().iter().zip(&eta).enumerate() {
        let s = obs_score_eta(y as f64, e.exp(), params.alpha);
        if !s.is_finite() {
            return Err(Error::NonFinite { row: j });
        }
        scores.push(s);
    }
    Ok((0..data.p())
        .map(|i| -data.column(i).iter().zip(&scores).map(|(x, s)| x * s).sum::<f64>())
        .collect())
}

/// Derivative of `L` with respect to `ln α`.
pub fn grad_log_alpha(data: &Dataset, params: &NBParams) -> Result<f64> {
    check_params(data, params)?;
    let eta = linear_predictors(data, &params.beta);
    let mut total = 0.0;
    for (j, (&y, &e)) in data.y().iter().zip(&eta).enumerate() {
        let s = obs_score_log_alpha(y, e.exp(), params.alpha);
        if !s.is_finite() {
            return Err(Error::NonFinite { row: j });
        }
        total -= s;
    }
    Ok(total)
}

/// `L + λ Σ_{i ∈ penalized} |β_i|`.
///
/// The solver minimizes the per-observation form of this objective: a fit
/// at penalty `λ` minimizes `penalized_objective(data, θ, n λ, set) / n`.
pub fn penalized_objective(data: &Dataset, params: &NBParams, lambda: f64, penalized: &PenaltySet) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
    }
    let loss = nb_neg_loglik(data, params)?;
    if lambda == 0.0 {
        return Ok(loss);
    }
    Ok(loss + lambda * penalized.l1_norm(&params.beta))
}

//! Oracles shared by the integration tests. Nothing here calls into the
//! library's likelihood code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{digamma, ln_gamma};
use tally_core::Dataset;

pub fn names(p: usize) -> Vec<String> {
    let mut out = vec!["Constant".to_string()];
    out.extend((1..p).map(|i| format!("v{i}")));
    out
}

/// Dense row-major copy of the design, for the oracles.
pub fn rows(data: &Dataset) -> Vec<Vec<f64>> {
    (0..data.n()).map(|j| data.row(j).to_vec()).collect()
}

/// NB2 negative log-likelihood written directly from the pmf.
pub fn oracle_loss(x: &[Vec<f64>], y: &[u64], beta: &[f64], alpha: f64) -> f64 {
    let m = 1.0 / alpha;
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            let mu = eta.exp();
            let yf = yi as f64;
            let ll = ln_gamma(m + yf) - ln_gamma(yf + 1.0) - ln_gamma(m)
                + m * (m / (m + mu)).ln()
                + yf * (mu / (m + mu)).ln();
            -ll
        })
        .sum()
}

/// Gradient of [`oracle_loss`] in `(β, ln α)`.
pub fn oracle_gradient(x: &[Vec<f64>], y: &[u64], beta: &[f64], alpha: f64) -> Vec<f64> {
    let p = beta.len();
    let m = 1.0 / alpha;
    let mut g = vec![0.0; p + 1];
    for (row, &yi) in x.iter().zip(y) {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = eta.exp();
        let yf = yi as f64;
        // d(-ll)/d eta
        let s = -(yf - mu) * m / (m + mu);
        for i in 0..p {
            g[i] += s * row[i];
        }
        // d(-ll)/dm, then chain rule dm/d ln α = -m
        let dm = -(digamma(m + yf) - digamma(m) + (m / (m + mu)).ln() + (mu - yf) / (m + mu));
        g[p] += dm * -m;
    }
    g
}

/// Unpenalized NB2 maximum likelihood by damped Newton-Raphson in
/// `(β, ln α)`. The Hessian is a central difference of the analytic gradient.
pub fn newton_mle(x: &[Vec<f64>], y: &[u64], start_alpha: f64) -> (Vec<f64>, f64) {
    let p = x[0].len();
    let mut theta = vec![0.0; p + 1];
    let ybar = y.iter().sum::<u64>() as f64 / y.len() as f64;
    theta[0] = ybar.max(0.1).ln();
    theta[p] = start_alpha.ln();
    let loss = |t: &[f64]| oracle_loss(x, y, &t[..p], t[p].exp());
    let grad = |t: &[f64]| oracle_gradient(x, y, &t[..p], t[p].exp());
    let n = y.len() as f64;

    for _ in 0..200 {
        let g = grad(&theta);
        if g.iter().all(|v| v.abs() < 1e-10 * n) {
            break;
        }
        let h = 1e-5;
        let mut hess = DMatrix::<f64>::zeros(p + 1, p + 1);
        for j in 0..=p {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            let (gu, gd) = (grad(&up), grad(&down));
            for i in 0..=p {
                hess[(i, j)] = (gu[i] - gd[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let gv = DVector::from_vec(g.clone());
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&gv),
            None => gv.clone() * (1.0 / n),
        };
        let before = loss(&theta);
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t - scale * s).collect();
            if loss(&trial) <= before + 1e-12 * before.abs() || scale < 1e-10 {
                theta = trial;
                break;
            }
            scale *= 0.5;
        }
    }
    (theta[..p].to_vec(), theta[p].exp())
}

/// Small random design with an intercept and uniform features. Counts are
/// uniform on `0..=3μ+2`; only the shape of the data matters to the callers.
pub fn random_instance(seed: u64, n: usize, p: usize) -> (Dataset, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((n, p).f());
    x.column_mut(0).fill(1.0);
    for i in 1..p {
        for j in 0..n {
            x[(j, i)] = rng.random_range(-1.5..1.5);
        }
    }
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-0.8..0.8)).collect();
    let alpha = rng.random_range(0.05..2.0);
    let y = (0..n)
        .map(|j| {
            let mu: f64 = (0..p).map(|i| x[(j, i)] * beta[i]).sum::<f64>().exp();
            rng.random_range(0..=(3.0 * mu).ceil() as u64 + 2)
        })
        .collect();
    (Dataset::new(x, y, names(p)).unwrap(), beta, alpha)
}

/// F1 score of the estimated support against the true support.
pub fn support_f1(truth: &[f64], estimate: &[f64]) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for (t, e) in truth.iter().zip(estimate) {
        match (*t != 0.0, *e != 0.0) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fneg += 1.0,
            _ => {}
        }
    }
    if tp + fp + fneg == 0.0 {
        1.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

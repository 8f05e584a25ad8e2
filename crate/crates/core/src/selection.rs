//! K-fold cross-validation of the penalty over a descending grid.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{format_float, Dataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{clamp_linear_predictor, grad_beta, NBParams};
use crate::solver::{check_grid, fit_path, FitResult, SolverOptions};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_GRID_SIZE: usize = 40;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub lambdas: Vec<f64>,
    pub mean_mse: Vec<f64>,
    pub sd_mse: Vec<f64>,
    /// `fold_mse[f][l]`: validation MSE of fold `f` at `lambdas[l]`.
    pub fold_mse: Vec<Vec<f64>>,
    /// Row index to fold index.
    pub fold_assignment: Vec<usize>,
    pub selected_lambda: f64,
    pub k: usize,
    pub seed: u64,
}

impl CVReport {
    /// Writes the error curve as `lambda,mean_mse,sd_mse`.
    pub fn write_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lambda", "mean_mse", "sd_mse"])?;
        for ((l, m), s) in self.lambdas.iter().zip(&self.mean_mse).zip(&self.sd_mse) {
            w.write_record([format_float(*l), format_float(*m), format_float(*s)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn selected_index(&self) -> usize {
        argmin_prefer_larger(&self.lambdas, &self.mean_mse)
    }
}

/// Mean squared error of `exp(x_j·β̂)` against the raw counts.
pub fn mse(fit: &FitResult, data: &Dataset) -> Result<f64> {
    if fit.beta.len() != data.p() {
        return Err(Error::DimensionMismatch {
            context: "mse coefficients",
            expected: data.p(),
            found: fit.beta.len(),
        });
    }
    let mut eta = vec![0.0; data.n()];
    for (i, &b) in fit.beta.iter().enumerate() {
        if b != 0.0 {
            for (e, x) in eta.iter_mut().zip(data.column(i)) {
                *e += x * b;
            }
        }
    }
    let total: f64 = eta
        .iter()
        .zip(data.y())
        .map(|(&e, &y)| {
            let r = y as f64 - clamp_linear_predictor(e).0.exp();
            r * r
        })
        .sum();
    Ok(total / data.n() as f64)
}

/// Seeded random partition of `0..n` into `k` folds whose sizes differ by
/// at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidInput(format!("cannot split {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, row) in order.into_iter().enumerate() {
        assignment[row] = pos % k;
    }
    Ok(assignment)
}

/// Log-spaced descending grid from `λ_hi` down to `λ_hi * ratio`, where
/// `λ_hi` is the largest per-observation gradient magnitude over penalized
/// coefficients at `β = 0`, `α = 1`.
pub fn default_grid(data: &Dataset, opts: &SolverOptions, count: usize, ratio: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!("grid ratio must lie in (0, 1), got {ratio}")));
    }
    let grad = grad_beta(data, &NBParams::new(vec![0.0; data.p()], 1.0)?)?;
    let n = data.n() as f64;
    let hi = grad
        .iter()
        .enumerate()
        .filter(|(i, _)| opts.penalized.contains(*i))
        .map(|(_, g)| g.abs() / n)
        .fold(0.0, f64::max);
    if !(hi > 0.0) {
        return Err(Error::InvalidInput("no penalized coefficient has a nonzero gradient at zero".into()));
    }
    if count == 1 {
        return Ok(vec![hi]);
    }
    let (lo_ln, hi_ln) = ((hi * ratio).ln(), hi.ln());
    Ok((0..count)
        .map(|s| (hi_ln + (lo_ln - hi_ln) * s as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Fits the regularization path on each fold's training rows and scores it
/// on the held-out rows.
pub fn cross_validate(
    data: &Dataset,
    lambdas: &[f64],
    k: usize,
    opts: &SolverOptions,
    seed: u64,
    exec: Execution,
) -> Result<CVReport> {
    check_grid(lambdas)?;
    let assignment = kfold_split(data.n(), k, seed)?;

    let per_fold = exec.map(k, |fold| -> Result<Vec<f64>> {
        let (train, valid): (Vec<usize>, Vec<usize>) = (0..data.n()).partition(|&r| assignment[r] != fold);
        let train = data.select_rows(&train);
        let valid = data.select_rows(&valid);
        let path = fit_path(&train, lambdas, opts).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        path.iter().map(|f| mse(f, &valid)).collect()
    });
    let fold_mse = per_fold.into_iter().collect::<Result<Vec<_>>>()?;

    let kf = k as f64;
    let mean_mse: Vec<f64> = (0..lambdas.len())
        .map(|l| fold_mse.iter().map(|f| f[l]).sum::<f64>() / kf)
        .collect();
    let sd_mse = (0..lambdas.len())
        .map(|l| {
            let ss: f64 = fold_mse.iter().map(|f| (f[l] - mean_mse[l]).powi(2)).sum();
            (ss / (kf - 1.0)).sqrt()
        })
        .collect();
    let selected = argmin_prefer_larger(lambdas, &mean_mse);
    Ok(CVReport {
        lambdas: lambdas.to_vec(),
        selected_lambda: lambdas[selected],
        mean_mse,
        sd_mse,
        fold_mse,
        fold_assignment: assignment,
        k,
        seed,
    })
}

/// λ with the smallest mean MSE; exact ties go to the larger λ.
pub fn select_lambda(report: &CVReport) -> f64 {
    report.lambdas[report.selected_index()]
}

fn argmin_prefer_larger(lambdas: &[f64], errors: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..lambdas.len() {
        let better = errors[i] < errors[best] || (errors[i] == errors[best] && lambdas[i] > lambdas[best]);
        if better {
            best = i;
        }
    }
    best
}

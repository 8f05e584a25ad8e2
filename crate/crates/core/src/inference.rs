//! Nonparametric bootstrap of the penalized fit at a fixed `λ`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{format_float, Dataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::solver::{fit, FitResult, SolverOptions};

/// Column label used for the over-dispersion draws.
pub const ALPHA_COLUMN: &str = "alpha";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub column_names: Vec<String>,
    /// One row per successful replicate: `p` coefficients followed by `α`.
    pub draws: Vec<Vec<f64>>,
    /// Fit on the full data at the same `λ`.
    pub point: FitResult,
    /// Sample standard deviation of each draw column (coefficients, then `α`).
    pub se: Vec<f64>,
    /// Share of draws in which each coefficient is exactly zero.
    pub zero_fraction: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Number of successful replicates (rows of `draws`).
    pub b: usize,
    pub requested: usize,
    pub failures: usize,
    pub seed: u64,
}

impl BootstrapSummary {
    /// Writes the draws with one column per coefficient plus `alpha`.
    pub fn write_draws_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.column_names.clone();
        header.push(ALPHA_COLUMN.to_string());
        w.write_record(&header)?;
        for row in &self.draws {
            w.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Row indices of replicate `replicate`: `n` draws with replacement from a
/// generator keyed on `(seed, replicate)`.
pub fn resample_indices(n: usize, seed: u64, replicate: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Refits the model on `b` resamples of the rows, each warm-started from the
/// full-data fit. Failed replicates are skipped and counted; more than 5%
/// failures is an error.
pub fn bootstrap(
    data: &Dataset,
    lambda: f64,
    b: usize,
    opts: &SolverOptions,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::InvalidInput(format!("bootstrap needs at least 2 replicates, got {b}")));
    }
    let point = fit(data, lambda, opts, None)?;
    let start = point.params();
    let n = data.n();

    let outcomes = exec.map(b, |r| -> Result<Vec<f64>> {
        let rows = resample_indices(n, seed, r as u64);
        let sample = data.select_rows(&rows);
        let refit = fit(&sample, lambda, opts, Some(&start))?;
        let mut row = refit.beta;
        row.push(refit.alpha);
        Ok(row)
    });
    let draws: Vec<Vec<f64>> = outcomes.iter().filter_map(|o| o.as_ref().ok().cloned()).collect();
    let failures = b - draws.len();
    if failures * 20 > b || draws.len() < 2 {
        return Err(Error::TooManyReplicateFailures { failed: failures, requested: b });
    }

    let width = data.p() + 1;
    let column = |c: usize| -> Vec<f64> { draws.iter().map(|row| row[c]).collect() };
    let mut se = Vec::with_capacity(width);
    let mut ci_low = Vec::with_capacity(width);
    let mut ci_high = Vec::with_capacity(width);
    for c in 0..width {
        let mut values = column(c);
        se.push(sample_sd(&values));
        values.sort_by(f64::total_cmp);
        ci_low.push(quantile_sorted(&values, 0.025));
        ci_high.push(quantile_sorted(&values, 0.975));
    }
    let zero_fraction = (0..data.p())
        .map(|c| draws.iter().filter(|row| row[c] == 0.0).count() as f64 / draws.len() as f64)
        .collect();

    Ok(BootstrapSummary {
        column_names: data.column_names().to_vec(),
        b: draws.len(),
        draws,
        point,
        se,
        zero_fraction,
        ci_low,
        ci_high,
        requested: b,
        failures,
        seed,
    })
}

/// Standard deviation with the `n - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linearly interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The percentile 95% interval excludes zero.
    pub significant: bool,
    /// The point estimate is exactly zero.
    pub zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
    pub alpha: f64,
    pub lambda: f64,
}

impl CoefficientTable {
    pub fn row(&self, name: &str) -> Option<&CoefficientRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Point estimates with bootstrap errors and significance / zero flags.
pub fn summarize(boot: &BootstrapSummary) -> CoefficientTable {
    let rows = boot
        .column_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let estimate = boot.point.beta[i];
            let zero = estimate == 0.0;
            CoefficientRow {
                name: name.clone(),
                estimate,
                se: boot.se[i],
                ci_low: boot.ci_low[i],
                ci_high: boot.ci_high[i],
                significant: !zero && interval_excludes_zero(boot.ci_low[i], boot.ci_high[i]),
                zero,
            }
        })
        .collect();
    CoefficientTable {
        rows,
        alpha: boot.point.alpha,
        lambda: boot.point.lambda,
    }
}

pub fn interval_excludes_zero(low: f64, high: f64) -> bool {
    low > 0.0 || high < 0.0
}

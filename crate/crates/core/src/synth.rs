//! Seeded negative binomial datasets with known coefficients.

use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{clamp_linear_predictor, NBParams};

/// Largest Poisson rate handed to the sampler.
const MAX_RATE: f64 = 1e15;

/// Distribution of one generated design column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnLaw {
    Intercept,
    /// Binary indicator, 1 with the given probability.
    Bernoulli(f64),
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub true_beta: Vec<f64>,
    pub true_alpha: f64,
    /// One law per column; column 0 must be [`ColumnLaw::Intercept`].
    pub design: Vec<ColumnLaw>,
    pub seed: u64,
}

impl SynthSpec {
    /// Intercept followed by `features` standard-normal columns.
    pub fn gaussian(n: usize, true_beta: Vec<f64>, true_alpha: f64, seed: u64) -> Self {
        let mut design = vec![ColumnLaw::StandardNormal; true_beta.len()];
        design[0] = ColumnLaw::Intercept;
        SynthSpec {
            n,
            true_beta,
            true_alpha,
            design,
            seed,
        }
    }

    pub fn p(&self) -> usize {
        self.true_beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("synthetic spec needs n >= 1".into()));
        }
        if self.true_beta.is_empty() {
            return Err(Error::InvalidInput("synthetic spec needs at least the intercept".into()));
        }
        if !(self.true_alpha > 0.0) || !self.true_alpha.is_finite() {
            return Err(Error::InvalidInput(format!("true_alpha must be positive, got {}", self.true_alpha)));
        }
        if self.design.len() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "design laws",
                expected: self.p(),
                found: self.design.len(),
            });
        }
        if self.design[0] != ColumnLaw::Intercept || self.design[1..].contains(&ColumnLaw::Intercept) {
            return Err(Error::InvalidInput("exactly column 0 must be the intercept".into()));
        }
        for law in &self.design {
            if let ColumnLaw::Bernoulli(q) = law {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::InvalidInput(format!("Bernoulli probability {q} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// One NB2 draw as a Gamma–Poisson mixture: `v ~ Gamma(shape 1/α, scale α)`
/// (mean 1), then `y ~ Poisson(v μ)`.
pub fn sample_nb<R: Rng + ?Sized>(mu: f64, alpha: f64, rng: &mut R) -> u64 {
    let mixing = Gamma::new(1.0 / alpha, alpha).expect("alpha > 0");
    let rate = (mixing.sample(rng) * mu).min(MAX_RATE);
    if !(rate > 0.0) {
        return 0;
    }
    let draw: f64 = Poisson::new(rate).expect("positive finite rate").sample(rng);
    draw as u64
}

/// Generates `(dataset, ground truth)`; identical for identical specs.
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, NBParams)> {
    spec.validate()?;
    let truth = NBParams::new(spec.true_beta.clone(), spec.true_alpha)?;
    let (n, p) = (spec.n, spec.p());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut x = Array2::<f64>::zeros((n, p).f());
    for (i, law) in spec.design.iter().enumerate() {
        let mut col = x.column_mut(i);
        match *law {
            ColumnLaw::Intercept => col.fill(1.0),
            ColumnLaw::Bernoulli(q) => {
                let dist = Bernoulli::new(q).expect("validated probability");
                col.iter_mut().for_each(|v| *v = dist.sample(&mut rng) as u8 as f64);
            }
            ColumnLaw::StandardNormal => {
                col.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            }
        }
    }

    let y = (0..n)
        .map(|j| {
            let eta = x.row(j).dot(&ndarray::ArrayView1::from(&spec.true_beta));
            let mu = clamp_linear_predictor(eta).0.exp();
            sample_nb(mu, spec.true_alpha, &mut rng)
        })
        .collect();

    let mut names = vec!["Constant".to_string()];
    names.extend((1..p).map(|i| format!("x{i}")));
    Ok((Dataset::new(x, y, names)?, truth))
}

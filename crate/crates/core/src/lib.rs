//! Sparse negative binomial regression for count data.
//!
//! The pipeline runs from a tweet corpus to a coefficient table:
//!
//! 1. [`features`] turns records, a follower series and a topic lexicon
//!    into a [`Dataset`];
//! 2. [`solver`] fits the L1-penalized NB2 model by cyclic coordinate
//!    descent with soft-thresholding;
//! 3. [`selection`] picks the penalty by K-fold cross-validation on
//!    out-of-fold MSE;
//! 4. [`inference`] bootstraps the fit at the chosen penalty;
//! 5. [`report`] renders the side-by-side coefficient table.
//!
//! [`synth`] generates data with known coefficients for testing.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod exec;
pub mod features;
pub mod inference;
pub mod model;
pub mod report;
pub mod selection;
pub mod solver;
pub mod special;
pub mod synth;

pub use data::{ColumnScaling, Dataset};
pub use error::{Error, Result};
pub use exec::Execution;
pub use inference::{bootstrap, summarize, BootstrapSummary, CoefficientTable};
pub use model::{grad_beta, grad_log_alpha, link_mu, nb_neg_loglik, penalized_objective, NBParams, PenaltySet};
pub use selection::{cross_validate, kfold_split, mse, select_lambda, CVReport};
pub use solver::{fit, fit_path, soft_threshold_step, FitResult, SolverOptions};
pub use special::digamma;

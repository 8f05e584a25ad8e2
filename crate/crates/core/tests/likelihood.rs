mod common;

use common::{oracle_gradient, oracle_loss, random_instance, rows};
use ndarray::array;
use proptest::prelude::*;
use tally_core::model::PenaltySet;
use tally_core::{grad_beta, grad_log_alpha, nb_neg_loglik, penalized_objective, Dataset, NBParams};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Relative error, absolute below magnitude 1.
fn scaled_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central finite differences of the library loss against the analytic
/// gradients.
fn finite_difference_error(data: &Dataset, params: &NBParams) -> f64 {
    let loss = |beta: &[f64], alpha: f64| nb_neg_loglik(data, &NBParams::new(beta.to_vec(), alpha).unwrap()).unwrap();
    let g = grad_beta(data, params).unwrap();
    let ga = grad_log_alpha(data, params).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..params.beta.len() {
        let h = 1e-5 * params.beta[i].abs().max(1.0);
        let mut up = params.beta.clone();
        let mut down = params.beta.clone();
        up[i] += h;
        down[i] -= h;
        let fd = (loss(&up, params.alpha) - loss(&down, params.alpha)) / (2.0 * h);
        worst = worst.max(scaled_err(fd, g[i]));
    }
    let h = 1e-5;
    let la = params.alpha.ln();
    let fd = (loss(&params.beta, (la + h).exp()) - loss(&params.beta, (la - h).exp())) / (2.0 * h);
    worst.max(scaled_err(fd, ga))
}

#[test]
fn gradients_match_finite_differences_on_random_instances() {
    for seed in 0..100 {
        let n = 5 + (seed as usize * 7) % 46;
        let p = 1 + (seed as usize) % 8;
        let (data, beta, alpha) = random_instance(seed, n, p);
        let params = NBParams::new(beta, alpha).unwrap();
        let err = finite_difference_error(&data, &params);
        assert!(err < 1e-5, "seed {seed}: error {err}");
    }
}

#[test]
fn loss_and_gradients_agree_with_independent_oracle() {
    for seed in 200..230 {
        let (data, beta, alpha) = random_instance(seed, 40, 5);
        let x = rows(&data);
        let params = NBParams::new(beta.clone(), alpha).unwrap();
        let ours = nb_neg_loglik(&data, &params).unwrap();
        let theirs = oracle_loss(&x, data.y(), &beta, alpha);
        assert!(rel_err(ours, theirs) < 1e-9, "seed {seed}: {ours} vs {theirs}");
        let g = grad_beta(&data, &params).unwrap();
        let og = oracle_gradient(&x, data.y(), &beta, alpha);
        for i in 0..5 {
            assert!((g[i] - og[i]).abs() < 1e-8 * og[i].abs().max(1.0));
        }
        let ga = grad_log_alpha(&data, &params).unwrap();
        assert!((ga - og[5]).abs() < 1e-8 * og[5].abs().max(1.0), "seed {seed}: {ga} vs {}", og[5]);
    }
}

#[test]
fn large_counts_and_tiny_alpha_stay_finite() {
    let d = Dataset::new(array![[1.0], [1.0], [1.0]], vec![0, 250, 100_000], vec!["Constant".into()]).unwrap();
    for alpha in [1e-9, 1e-4, 0.07, 3.0, 1e3] {
        let p = NBParams::new(vec![5.0], alpha).unwrap();
        let l = nb_neg_loglik(&d, &p).unwrap();
        let o = oracle_loss(&rows(&d), d.y(), &[5.0], alpha);
        assert!(l.is_finite());
        assert!(rel_err(l, o) < 1e-6, "alpha {alpha}: {l} vs {o}");
        assert!(grad_log_alpha(&d, &p).unwrap().is_finite());
    }
}

#[test]
fn poisson_limit_per_observation() {
    for seed in 0..10 {
        let (data, beta, _) = random_instance(seed, 30, 4);
        let nb = nb_neg_loglik(&data, &NBParams::new(beta.clone(), 1e-8).unwrap()).unwrap();
        let poisson: f64 = (0..data.n())
            .map(|j| {
                let eta: f64 = data.row(j).iter().zip(&beta).map(|(a, b)| a * b).sum();
                let y = data.y()[j] as f64;
                eta.exp() - y * eta + statrs::function::gamma::ln_gamma(y + 1.0)
            })
            .sum();
        assert!((nb - poisson).abs() / data.n() as f64 <= 1e-4, "seed {seed}: {nb} vs {poisson}");
    }
}

fn dataset_strategy() -> impl Strategy<Value = (Dataset, NBParams)> {
    (2usize..30, 1usize..6).prop_flat_map(|(n, p)| {
        (
            proptest::collection::vec(-2.0f64..2.0, n * (p - 1)),
            proptest::collection::vec(0u64..60, n),
            proptest::collection::vec(-1.0f64..1.0, p),
            0.01f64..5.0,
        )
            .prop_map(move |(feats, y, beta, alpha)| {
                let mut x = ndarray::Array2::<f64>::ones((n, p));
                for j in 0..n {
                    for i in 1..p {
                        x[(j, i)] = feats[j * (p - 1) + i - 1];
                    }
                }
                let d = Dataset::new(x, y, common::names(p)).unwrap();
                (d, NBParams::new(beta, alpha).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_additive_over_row_blocks((data, params) in dataset_strategy(), cut in 0.0f64..1.0) {
        let k = ((data.n() as f64) * cut) as usize;
        let head: Vec<usize> = (0..k).collect();
        let tail: Vec<usize> = (k..data.n()).collect();
        let whole = nb_neg_loglik(&data, &params).unwrap();
        let parts = nb_neg_loglik(&data.select_rows(&head), &params).unwrap()
            + nb_neg_loglik(&data.select_rows(&tail), &params).unwrap();
        prop_assert!(rel_err(whole, parts) < 1e-10);
    }

    #[test]
    fn objective_ignores_row_order((data, params) in dataset_strategy(), lambda in 0.0f64..3.0, shift in 0usize..50) {
        let n = data.n();
        let order: Vec<usize> = (0..n).map(|j| (j * 7 + shift) % n).collect();
        let mut seen = order.clone();
        seen.sort();
        seen.dedup();
        prop_assume!(seen.len() == n);
        let a = penalized_objective(&data, &params, lambda, &PenaltySet::All).unwrap();
        let b = penalized_objective(&data.select_rows(&order), &params, lambda, &PenaltySet::All).unwrap();
        prop_assert!(rel_err(a, b) < 1e-10);
    }

    #[test]
    fn loss_is_nonnegative_and_finite((data, params) in dataset_strategy()) {
        let l = nb_neg_loglik(&data, &params).unwrap();
        prop_assert!(l.is_finite());
        prop_assert!(l >= -1e-9);
    }

    #[test]
    fn penalty_adds_weighted_l1((data, params) in dataset_strategy(), lambda in 0.0f64..3.0) {
        let l = nb_neg_loglik(&data, &params).unwrap();
        let all = penalized_objective(&data, &params, lambda, &PenaltySet::All).unwrap();
        let l1: f64 = params.beta.iter().map(|b| b.abs()).sum();
        prop_assert!((all - (l + lambda * l1)).abs() < 1e-9 * all.abs().max(1.0));
        let skip = penalized_objective(&data, &params, lambda, &PenaltySet::AllButIntercept).unwrap();
        prop_assert!((skip - (l + lambda * (l1 - params.beta[0].abs()))).abs() < 1e-9 * skip.abs().max(1.0));
    }

    #[test]
    fn gradients_certified((data, params) in dataset_strategy()) {
        prop_assert!(finite_difference_error(&data, &params) < 1e-5);
    }
}

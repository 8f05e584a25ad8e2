mod common;

use common::{newton_mle, random_instance, rows};
use ndarray::array;
use proptest::prelude::*;
use tally_core::model::PenaltySet;
use tally_core::solver::{ALPHA_CEILING, ALPHA_FLOOR};
use tally_core::synth::{generate, SynthSpec};
use tally_core::{fit, fit_path, penalized_objective, Dataset, NBParams, SolverOptions};

fn tight(eta: f64) -> SolverOptions {
    SolverOptions {
        eta,
        tol: 0.0,
        max_iters: 50_000,
        ..Default::default()
    }
}

fn no_tiny_coefficients(beta: &[f64]) -> bool {
    beta.iter().all(|b| *b == 0.0 || b.abs() >= 1e-12)
}

#[test]
fn default_step_descends_on_small_instances() {
    for seed in 0..20 {
        let (data, _, _) = random_instance(seed, 40, 4);
        let data = data.standardized();
        let opts = SolverOptions {
            max_iters: 400,
            ..Default::default()
        };
        let res = fit(&data, 0.05, &opts, None).unwrap();
        let trace = &res.objective_trace;
        assert!(trace.iter().all(|v| v.is_finite()));
        assert!(trace.last().unwrap() <= &trace[0], "seed {seed}");
        for w in trace.windows(2).skip(10) {
            // trace is per observation; the tolerance is on the summed objective
            assert!((w[1] - w[0]) * data.n() as f64 <= 1e-6, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn trace_matches_penalized_objective() {
    let (data, _, _) = random_instance(3, 30, 3);
    let lambda = 0.1;
    let res = fit(&data, lambda, &SolverOptions { eta: 0.05, ..Default::default() }, None).unwrap();
    let n = data.n() as f64;
    let direct = penalized_objective(&data, &res.params(), lambda * n, &PenaltySet::All).unwrap() / n;
    assert!((direct - res.final_objective()).abs() < 1e-9 * direct.abs());
    assert_eq!(res.iters_run + 1, res.objective_trace.len());
}

#[test]
fn huge_lambda_zeroes_everything() {
    let (data, _, _) = random_instance(9, 50, 6);
    let res = fit(&data, 1e6, &SolverOptions::default(), None).unwrap();
    assert!(res.beta.iter().all(|b| *b == 0.0));
    assert_eq!(res.zero_count(), 6);
}

#[test]
fn unpenalized_intercept_survives_huge_lambda() {
    let (data, _, _) = random_instance(9, 50, 6);
    let opts = SolverOptions {
        eta: 0.1,
        penalized: PenaltySet::AllButIntercept,
        ..Default::default()
    };
    let res = fit(&data, 1e6, &opts, None).unwrap();
    assert!(res.beta[0] != 0.0);
    assert!(res.beta[1..].iter().all(|b| *b == 0.0));
}

#[test]
fn identical_inputs_give_identical_results() {
    let (data, _, _) = random_instance(5, 60, 5);
    let opts = SolverOptions { eta: 0.05, ..Default::default() };
    let a = fit(&data, 0.02, &opts, None).unwrap();
    let b = fit(&data, 0.02, &opts, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.beta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.beta.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn row_order_does_not_move_the_solution() {
    for seed in 0..5 {
        let (data, _, _) = random_instance(seed, 50, 4);
        let data = data.standardized();
        let n = data.n();
        let order: Vec<usize> = (0..n).rev().collect();
        let opts = tight(0.2);
        let a = fit(&data, 0.03, &opts, None).unwrap();
        let b = fit(&data.select_rows(&order), 0.03, &opts, None).unwrap();
        assert!(a.converged && b.converged);
        for (x, y) in a.beta.iter().zip(&b.beta) {
            assert!((x - y).abs() <= 1e-8, "seed {seed}: {x} vs {y}");
        }
        // the objective is flat in α near the optimum, so α settles less tightly
        assert!((a.alpha - b.alpha).abs() <= 1e-6, "seed {seed}: alpha {} vs {}", a.alpha, b.alpha);
    }
}

#[test]
fn recovers_truth_without_penalty() {
    let spec = SynthSpec::gaussian(2000, vec![0.8, 0.5, -0.4, 0.2], 0.5, 17);
    let (data, truth) = generate(&spec).unwrap();
    let res = fit(&data, 0.0, &tight(0.3), None).unwrap();
    assert!(res.converged);
    for (b, t) in res.beta.iter().zip(&truth.beta) {
        assert!((b - t).abs() < 0.1, "{b} vs {t}");
    }
    assert!((res.alpha - truth.alpha).abs() < 0.15);
    let (ob, oa) = newton_mle(&rows(&data), data.y(), 1.0);
    for (b, o) in res.beta.iter().zip(&ob) {
        assert!((b - o).abs() < 1e-3, "{b} vs oracle {o}");
    }
    assert!((res.alpha - oa).abs() < 1e-3);
}

#[test]
fn warm_path_never_worse_than_cold_start() {
    let mut beta = vec![0.0; 8];
    beta[0] = 0.7;
    beta[2] = 0.5;
    beta[5] = -0.4;
    let (data, _) = generate(&SynthSpec::gaussian(400, beta, 0.5, 4)).unwrap();
    let lambdas = [0.3, 0.1, 0.03, 0.01, 0.003, 0.0];
    let opts = SolverOptions {
        eta: 0.2,
        tol: 1e-12,
        max_iters: 20_000,
        ..Default::default()
    };
    let path = fit_path(&data, &lambdas, &opts).unwrap();
    assert_eq!(path.len(), lambdas.len());
    let n = data.n() as f64;
    for (res, &lambda) in path.iter().zip(&lambdas) {
        assert_eq!(res.lambda, lambda);
        let cold = fit(&data, lambda, &opts, None).unwrap();
        let warm_obj = penalized_objective(&data, &res.params(), lambda * n, &PenaltySet::All).unwrap();
        let cold_obj = penalized_objective(&data, &cold.params(), lambda * n, &PenaltySet::All).unwrap();
        assert!(warm_obj <= cold_obj + 1e-6, "λ={lambda}: warm {warm_obj} cold {cold_obj}");
    }
    assert!(path[0].zero_count() >= path.last().unwrap().zero_count());
    assert!(path[0].zero_count() > 0);
}

#[test]
fn single_point_path_equals_fit() {
    let (data, _, _) = random_instance(11, 40, 3);
    let opts = SolverOptions { eta: 0.05, ..Default::default() };
    let path = fit_path(&data, &[0.02], &opts).unwrap();
    assert_eq!(path[0], fit(&data, 0.02, &opts, None).unwrap());
}

#[test]
fn path_rejects_unsorted_grid() {
    let (data, _, _) = random_instance(1, 20, 2);
    let opts = SolverOptions::default();
    assert!(fit_path(&data, &[0.1, 0.2], &opts).is_err());
    assert!(fit_path(&data, &[0.1, 0.1], &opts).is_err());
    assert!(fit_path(&data, &[0.1, -0.1], &opts).is_err());
    assert!(fit_path(&data, &[], &opts).is_err());
}

#[test]
fn all_zero_counts_still_fit() {
    let data = Dataset::new(
        array![[1.0, 0.3], [1.0, -0.2], [1.0, 1.1], [1.0, -1.2]],
        vec![0, 0, 0, 0],
        common::names(2),
    )
    .unwrap();
    let res = fit(&data, 0.0, &SolverOptions { eta: 0.1, max_iters: 2000, ..Default::default() }, None).unwrap();
    assert!(res.alpha >= ALPHA_FLOOR && res.alpha <= ALPHA_CEILING);
    assert!(res.objective_trace.iter().all(|v| v.is_finite()));
}

#[test]
fn explicit_init_is_respected() {
    let (data, _, _) = random_instance(2, 30, 3);
    let init = NBParams::new(vec![0.1, 0.2, 0.3], 0.4).unwrap();
    let res = fit(&data, 0.0, &SolverOptions { max_iters: 1, ..Default::default() }, Some(&init)).unwrap();
    assert_eq!(res.iters_run, 1);
    assert!(res.beta.iter().zip(&init.beta).all(|(a, b)| (a - b).abs() < 0.1));
    let wrong = NBParams::new(vec![0.0; 2], 1.0).unwrap();
    assert!(fit(&data, 0.0, &SolverOptions::default(), Some(&wrong)).is_err());
    assert!(fit(&data, -1.0, &SolverOptions::default(), None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_fits_have_no_tiny_coefficients(seed in 0u64..10_000, lambda in 0.0f64..0.5) {
        let (data, _, _) = random_instance(seed, 30, 5);
        let data = data.standardized();
        let res = fit(&data, lambda, &SolverOptions { eta: 0.1, ..Default::default() }, None).unwrap();
        prop_assert!(no_tiny_coefficients(&res.beta));
        prop_assert!(res.alpha > 0.0);
    }

    #[test]
    fn more_penalty_never_lowers_the_l1_norm_much(seed in 0u64..10_000) {
        let (data, _, _) = random_instance(seed, 40, 4);
        let data = data.standardized();
        let opts = SolverOptions { eta: 0.1, tol: 1e-12, max_iters: 20_000, ..Default::default() };
        let path = fit_path(&data, &[0.5, 0.05, 0.0], &opts).unwrap();
        let l1 = |b: &[f64]| b.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!(l1(&path[0].beta) <= l1(&path[2].beta) + 1e-6);
    }
}

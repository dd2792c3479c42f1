mod common;

use abc_adjust_core::linalg::Matrix;
use abc_adjust_core::regression::{
    fit_log_variance, fit_mlp, fit_ridge, fit_wls_linear, Mlp, MlpConfig, VarianceKind,
};
use abc_adjust_core::rng::Stream;
use common::*;
use proptest::prelude::*;

#[test]
fn wls_matches_normal_equations() {
    let mut rng = Stream::new(11, 0);
    let stats = random_matrix(&mut rng, 50, 3);
    let theta = {
        let mut t = random_matrix(&mut rng, 50, 2);
        for i in 0..50 {
            t[(i, 0)] += 1.5 * stats[(i, 0)] - 0.5 * stats[(i, 2)];
            t[(i, 1)] += 3.0 + stats[(i, 1)];
        }
        t
    };
    let w = vec![1.0 / 50.0; 50];
    let model = fit_wls_linear(&stats, &theta, &w).unwrap();
    let (alpha, beta) = normal_equations(&stats, &theta, &w, 0.0);
    for k in 0..2 {
        assert!((model.intercept().unwrap()[k] - alpha[k]).abs() < 1e-10);
        for j in 0..3 {
            assert!((model.coefficients().unwrap()[(k, j)] - beta[(k, j)]).abs() < 1e-10);
        }
    }
}

#[test]
fn wls_with_unequal_weights_matches_normal_equations() {
    let mut rng = Stream::new(12, 0);
    let stats = random_matrix(&mut rng, 40, 2);
    let theta = random_matrix(&mut rng, 40, 1);
    let w = random_weights(&mut rng, 40);
    let model = fit_wls_linear(&stats, &theta, &w).unwrap();
    let (alpha, beta) = normal_equations(&stats, &theta, &w, 0.0);
    assert!((model.intercept().unwrap()[0] - alpha[0]).abs() < 1e-10);
    for j in 0..2 {
        assert!((model.coefficients().unwrap()[(0, j)] - beta[(0, j)]).abs() < 1e-10);
    }
}

#[test]
fn weighted_residuals_have_zero_mean() {
    let mut rng = Stream::new(13, 0);
    let stats = random_matrix(&mut rng, 60, 2);
    let theta = random_matrix(&mut rng, 60, 2).map(|x| x * x);
    let w = random_weights(&mut rng, 60);
    let model = fit_wls_linear(&stats, &theta, &w).unwrap();
    let r = model.residuals(&stats, &theta).unwrap();
    for k in 0..2 {
        let s: f64 = (0..60).map(|i| w[i] * r[(i, k)]).sum();
        assert!(s.abs() < 1e-10);
        assert!(weighted_var(&r.column(k), &w) <= weighted_var(&theta.column(k), &w) + 1e-12);
    }
}

#[test]
fn ridge_without_penalty_equals_linear() {
    let mut rng = Stream::new(14, 0);
    let stats = random_matrix(&mut rng, 30, 3);
    let theta = random_matrix(&mut rng, 30, 1);
    let w = random_weights(&mut rng, 30);
    let a = fit_wls_linear(&stats, &theta, &w).unwrap();
    let b = fit_ridge(&stats, &theta, &w, 0.0).unwrap();
    assert!((a.intercept().unwrap()[0] - b.intercept().unwrap()[0]).abs() < 1e-10);
    for j in 0..3 {
        let (x, y) = (a.coefficients().unwrap()[(0, j)], b.coefficients().unwrap()[(0, j)]);
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn huge_penalty_gives_weighted_mean() {
    let mut rng = Stream::new(15, 0);
    let mut stats = random_matrix(&mut rng, 30, 2);
    let theta = random_matrix(&mut rng, 30, 1).map(|x| 2.0 + x);
    let w = random_weights(&mut rng, 30);
    for j in 0..2 {
        let mean: f64 = (0..30).map(|i| w[i] * stats[(i, j)]).sum();
        for i in 0..30 {
            stats[(i, j)] -= mean;
        }
    }
    let model = fit_ridge(&stats, &theta, &w, 1e12).unwrap();
    let wmean: f64 = (0..30).map(|i| w[i] * theta[(i, 0)]).sum();
    assert!(model.coefficients().unwrap().as_slice().iter().all(|b| b.abs() < 1e-6));
    assert!(((model.intercept().unwrap()[0] - wmean) / wmean).abs() < 1e-6);
}

#[test]
fn ridge_splits_duplicate_columns_like_the_closed_form() {
    let mut rng = Stream::new(16, 0);
    let base = random_matrix(&mut rng, 40, 1);
    let mut stats = Matrix::zeros(40, 2);
    let mut theta = Matrix::zeros(40, 1);
    for i in 0..40 {
        stats[(i, 0)] = base[(i, 0)];
        stats[(i, 1)] = base[(i, 0)];
        theta[(i, 0)] = 1.0 + 2.0 * base[(i, 0)] + 0.1 * rng.normal();
    }
    let w = random_weights(&mut rng, 40);
    let model = fit_ridge(&stats, &theta, &w, 1e-3).unwrap();
    let (alpha, beta) = normal_equations(&stats, &theta, &w, 1e-3);
    let coef = model.coefficients().unwrap();
    assert!((coef[(0, 0)] - coef[(0, 1)]).abs() < 1e-10);
    assert!((coef[(0, 0)] - beta[(0, 0)]).abs() < 1e-8);
    assert!((model.intercept().unwrap()[0] - alpha[0]).abs() < 1e-8);
}

#[test]
fn affine_identity_of_predict() {
    let mut rng = Stream::new(17, 0);
    let stats = random_matrix(&mut rng, 30, 2);
    let theta = random_matrix(&mut rng, 30, 2);
    let model = fit_wls_linear(&stats, &theta, &vec![1.0 / 30.0; 30]).unwrap();
    let s = [0.3, -1.2];
    let t = [2.0, 0.7];
    let sum = [s[0] + t[0], s[1] + t[1]];
    let pts = Matrix::from_rows(&[s, t, [0.0, 0.0], sum]).unwrap();
    let y = model.predict(&pts).unwrap();
    for k in 0..2 {
        assert!((y[(0, k)] + y[(1, k)] - y[(2, k)] - y[(3, k)]).abs() < 1e-10);
    }
}

#[test]
fn predictions_do_not_depend_on_statistic_units() {
    let mut rng = Stream::new(18, 0);
    let stats = random_matrix(&mut rng, 50, 3);
    let theta = random_matrix(&mut rng, 50, 1);
    let w = random_weights(&mut rng, 50);
    let factors = [1e-3, 7.0, 250.0];
    let shifts = [5.0, -2.0, 1e3];
    let rescaled = {
        let mut m = stats.clone();
        for i in 0..50 {
            for j in 0..3 {
                m[(i, j)] = m[(i, j)] * factors[j] + shifts[j];
            }
        }
        m
    };
    let a = fit_wls_linear(&stats, &theta, &w).unwrap().predict(&stats).unwrap();
    let b = fit_wls_linear(&rescaled, &theta, &w).unwrap().predict(&rescaled).unwrap();
    for i in 0..50 {
        assert!((a[(i, 0)] - b[(i, 0)]).abs() < 1e-10);
    }
}

#[test]
fn log_variance_slope_monte_carlo() {
    // θ = exp(s/2)·ζ, so log σ²(s) = s and the fitted slope should be 1.
    let mut rng = Stream::new(19, 0);
    let n = 10_000;
    let mut stats = Matrix::zeros(n, 1);
    let mut resid = Matrix::zeros(n, 1);
    for i in 0..n {
        let s = 4.0 * rng.uniform() - 2.0;
        stats[(i, 0)] = s;
        resid[(i, 0)] = (s / 2.0).exp() * rng.normal();
    }
    let v = fit_log_variance(&stats, &resid, &vec![1.0 / n as f64; n], &VarianceKind::Linear).unwrap();
    let slope = v.models()[0].coefficients().unwrap()[(0, 0)];
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = Stream::new(20, 0);
    let x = random_matrix(&mut rng, 25, 3);
    let t = random_matrix(&mut rng, 25, 2);
    let w = random_weights(&mut rng, 25);
    let l2 = 1e-2;
    let net = Mlp::init(3, 5, 2, 99);
    let (_, grad) = net.loss_and_gradient(&x, &t, &w, l2);
    let eps = 1e-6;
    for (idx, g) in grad.iter().enumerate() {
        let mut plus = net.params().to_vec();
        let mut minus = net.params().to_vec();
        plus[idx] += eps;
        minus[idx] -= eps;
        let lp = Mlp::from_params(3, 5, 2, plus).unwrap().loss(&x, &t, &w, l2);
        let lm = Mlp::from_params(3, 5, 2, minus).unwrap().loss(&x, &t, &w, l2);
        let fd = (lp - lm) / (2.0 * eps);
        let rel = (fd - g).abs() / g.abs().max(1e-3);
        assert!(rel < 1e-5, "param {idx}: analytic {g}, fd {fd}");
    }
}

fn affine_data(n: usize) -> (Matrix, Matrix, Vec<f64>) {
    let mut rng = Stream::new(21, 0);
    let stats = random_matrix(&mut rng, n, 2);
    let mut theta = Matrix::zeros(n, 1);
    for i in 0..n {
        theta[(i, 0)] = 0.5 + 1.5 * stats[(i, 0)] - 0.8 * stats[(i, 1)];
    }
    (stats, theta, vec![1.0 / n as f64; n])
}

#[test]
fn mlp_learns_affine_data() {
    let (stats, theta, w) = affine_data(200);
    let cfg = MlpConfig {
        hidden: 4,
        epochs: 5000,
        l2: 0.0,
        ..MlpConfig::for_inputs(2)
    };
    let model = fit_mlp(&stats, &theta, &w, &cfg).unwrap();
    let r = model.residuals(&stats, &theta).unwrap();
    let mse: f64 = (0..200).map(|i| w[i] * r[(i, 0)] * r[(i, 0)]).sum();
    let var = weighted_var(&theta.column(0), &w);
    assert!(mse < 1e-4 * var, "mse {mse} var {var}");
}

#[test]
fn mlp_training_is_monotone_and_reproducible() {
    let (stats, mut theta, w) = affine_data(120);
    for i in 0..120 {
        theta[(i, 0)] = theta[(i, 0)].sin();
    }
    let cfg = MlpConfig {
        seed: 5,
        epochs: 300,
        ..MlpConfig::for_inputs(2)
    };
    let a = fit_mlp(&stats, &theta, &w, &cfg).unwrap();
    let b = fit_mlp(&stats, &theta, &w, &cfg).unwrap();
    assert_eq!(a, b);
    let hist = a.loss_history().unwrap();
    assert!(hist.windows(2).all(|h| h[1] <= h[0]));
    assert!(hist.last().unwrap() < &hist[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wls_is_equivariant(seed in 0u64..1000, a in -5.0f64..5.0, b in -10.0f64..10.0) {
        prop_assume!(a.abs() > 1e-3);
        let mut rng = Stream::new(seed, 0);
        let stats = random_matrix(&mut rng, 20, 2);
        let theta = random_matrix(&mut rng, 20, 1);
        let w = random_weights(&mut rng, 20);
        let m1 = fit_wls_linear(&stats, &theta, &w).unwrap();
        let m2 = fit_wls_linear(&stats, &theta.map(|x| a * x + b), &w).unwrap();
        let (a1, a2) = (m1.intercept().unwrap()[0], m2.intercept().unwrap()[0]);
        prop_assert!((a2 - (a * a1 + b)).abs() < 1e-9);
        for j in 0..2 {
            let (b1, b2) = (m1.coefficients().unwrap()[(0, j)], m2.coefficients().unwrap()[(0, j)]);
            prop_assert!((b2 - a * b1).abs() < 1e-9);
        }
    }

    #[test]
    fn ridge_norm_shrinks_with_penalty(seed in 0u64..1000, l1 in 1e-4f64..1.0, factor in 1.01f64..100.0) {
        let mut rng = Stream::new(seed, 1);
        let stats = random_matrix(&mut rng, 25, 3);
        let theta = random_matrix(&mut rng, 25, 1);
        let w = random_weights(&mut rng, 25);
        let norm = |l: f64| {
            let m = fit_ridge(&stats, &theta, &w, l).unwrap();
            m.coefficients().unwrap().as_slice().iter().map(|b| b * b).sum::<f64>()
        };
        prop_assert!(norm(l1) >= norm(l1 * factor) - 1e-15);
    }
}

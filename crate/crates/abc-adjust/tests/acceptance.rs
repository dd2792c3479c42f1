//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). Extra arguments that do not
//! start with `-` select criteria by substring.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use abc_adjust_core::adjustment::{adjust, adjust_heteroscedastic, adjust_homoscedastic, AdjustmentConfig};
use abc_adjust_core::data::{ObservedSummaries, SampleLabel, SimulationTable, Transform, TransformSpec, WeightedSample};
use abc_adjust_core::linalg::Matrix;
use abc_adjust_core::pipeline::{adjust_rejection, MethodSpec};
use abc_adjust_core::posterior::{summarize, weighted_mean_var};
use abc_adjust_core::regression::{fit_log_variance, fit_wls_linear, MeanKind, Mlp, VarianceKind};
use abc_adjust_core::rejection::{reject, Kernel, RejectionConfig, Standardization};
use abc_adjust_core::rng::{derive_seed, Stream};
use abc_adjust_core::toy::{analytic_posterior, simulate, ToyId, ToySpec};
use abc_adjust_core::validation::{choose_holdout, cross_validate, mse_study};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("conjugate-oracle accuracy", conjugate_oracle),
        ("linear adjustment lowers CV error", cv_ordering),
        ("shrinkage invariant", shrinkage),
        ("rejection MSE grows with q", curse_of_dimensionality),
        ("exact-formula oracles", formula_oracles),
        ("heteroscedastic calibration", heteroscedastic_benefit),
        ("logit support guarantee", transform_support),
        ("byte-identical reruns", determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("{verdict} {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn identity(p: usize) -> TransformSpec {
    TransformSpec::identity(p)
}

fn conjugate_oracle() -> Outcome {
    let start = Instant::now();
    let spec = ToySpec::new(ToyId::GaussianConjugate, 1);
    let draw = simulate(&spec, 100_000).unwrap();
    let cfg = RejectionConfig::with_rate(Kernel::Epanechnikov, 0.01);
    let rej = reject(&draw.table, &draw.observed, &cfg).unwrap();
    let ll = adjust_rejection(&draw.table, &draw.observed, &rej, &MethodSpec::loclinear(false).adjustment(identity(1)))
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let (mean, var) = analytic_posterior(&spec, draw.observed.values()).unwrap();
    let (ml, vl) = weighted_mean_var(&ll.sample);
    let (_, vr) = weighted_mean_var(&rej.sample);
    let mean_gap = (ml[0] - mean).abs() / var.sqrt();
    let ll_var = (vl[0] / var - 1.0).abs();
    let rej_var = (vr[0] / var - 1.0).abs();
    outcome(
        mean_gap < 0.05 && ll_var < 0.25 && rej_var < 0.5 && elapsed < 30.0,
        format!(
            "|mean gap|/sd = {mean_gap:.4} (< 0.05), loclinear var off by {:.1}% (< 25%), \
             rejection var off by {:.1}% (< 50%), {elapsed:.2}s (< 30s)",
            100.0 * ll_var,
            100.0 * rej_var
        ),
    )
}

fn cv_ordering() -> Outcome {
    let methods = [MethodSpec::rejection(), MethodSpec::loclinear(false)];
    let cfg = RejectionConfig::with_rate(Kernel::Epanechnikov, 0.01);
    let mut wins = 0;
    for r in 0..100 {
        let seed = derive_seed(2024, r);
        let draw = simulate(&ToySpec::new(ToyId::LinearGaussianMulti, seed), 10_000).unwrap();
        let report = cross_validate(&draw.table, &methods, &cfg, &identity(1), 100, seed).unwrap();
        if report.methods[1].error < report.methods[0].error {
            wins += 1;
        }
    }
    outcome(wins >= 95, format!("loclinear-homo beat rejection in {wins}/100 repetitions (>= 95)"))
}

fn random_simulator_case(case: u64) -> (SimulationTable, ObservedSummaries, RejectionConfig) {
    let mut rng = Stream::new(77, case);
    let n = 200 + rng.below(2800);
    let p = 1 + rng.below(3);
    let q = 1 + rng.below(6);
    let mut theta = Matrix::zeros(n, p);
    let mut stats = Matrix::zeros(n, q);
    let shapes: Vec<usize> = (0..p).map(|_| rng.below(3)).collect();
    let links: Vec<(usize, usize, f64)> = (0..q)
        .map(|_| (rng.below(4), rng.below(p), rng.normal() * 2.0))
        .collect();
    for i in 0..n {
        for k in 0..p {
            theta[(i, k)] = match shapes[k] {
                0 => rng.normal(),
                1 => 5.0 * rng.uniform(),
                _ => rng.normal().exp(),
            };
        }
        for (j, &(link, k, a)) in links.iter().enumerate() {
            let t = theta[(i, k)];
            let signal = match link {
                0 => t,
                1 => t.sin(),
                2 => t * t,
                _ => t.min(5.0).exp(),
            };
            stats[(i, j)] = a * signal + (0.1 + 0.3 * t.abs()) * rng.normal();
        }
    }
    let obs_row = rng.below(n);
    let obs: Vec<f64> = stats.row(obs_row).iter().map(|s| s + 0.1 * rng.normal()).collect();
    let kernel = [Kernel::Uniform, Kernel::Epanechnikov, Kernel::Gaussian][rng.below(3)];
    let standardization = [Standardization::Mad, Standardization::Sd][rng.below(2)];
    let min_rate = 10.0 * (q + 2) as f64 / n as f64;
    let rate = (0.02 + 0.48 * rng.uniform()).max(min_rate);
    let table = SimulationTable::unnamed(theta, stats).unwrap();
    let cfg = RejectionConfig {
        standardization,
        ..RejectionConfig::with_rate(kernel, rate)
    };
    (table, ObservedSummaries::new(obs).unwrap(), cfg)
}

fn shrinkage() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for case in 0..50 {
        let (table, obs, cfg) = random_simulator_case(case);
        let rej = reject(&table, &obs, &cfg).unwrap();
        let adj = adjust_rejection(&table, &obs, &rej, &MethodSpec::loclinear(false).adjustment(identity(table.p())))
            .unwrap();
        let (_, va) = weighted_mean_var(&adj.sample);
        let (_, vr) = weighted_mean_var(&rej.sample);
        for (a, r) in va.iter().zip(&vr) {
            worst = worst.max(a - r);
            if *a > r + 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("50 random cases, {violations} violations, max var(adj) - var(rej) = {worst:.3e}"),
    )
}

fn curse_of_dimensionality() -> Outcome {
    let base = ToySpec::new(ToyId::GaussianConjugate, 0);
    let cfg = RejectionConfig::with_rate(Kernel::Epanechnikov, 0.01);
    let mut wins = 0;
    let mut ratios = Vec::new();
    for run in 0..10 {
        let rows = mse_study(&base, &[10_000], &[1, 5], &[MethodSpec::rejection()], &cfg, 20, 300 + run).unwrap();
        ratios.push(rows[1].mse / rows[0].mse);
        if rows[1].mse > rows[0].mse {
            wins += 1;
        }
    }
    ratios.sort_by(f64::total_cmp);
    outcome(
        wins >= 9,
        format!("MSE(q=5) > MSE(q=1) in {wins}/10 runs (>= 9), median ratio {:.2}", ratios[5]),
    )
}

fn random_matrix(rng: &mut Stream, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

fn random_weights(rng: &mut Stream, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// `(XᵀWX)⁻¹XᵀWθ` with an intercept column, solved by nalgebra's LU.
fn normal_equations(stats: &Matrix, theta: &Matrix, w: &[f64]) -> nalgebra::DMatrix<f64> {
    let (m, q) = (stats.rows(), stats.cols());
    let x = nalgebra::DMatrix::from_fn(m, q + 1, |i, j| if j == 0 { 1.0 } else { stats[(i, j - 1)] });
    let y = nalgebra::DMatrix::from_row_slice(m, theta.cols(), theta.as_slice());
    let wx = nalgebra::DMatrix::from_fn(m, q + 1, |i, j| w[i] * x[(i, j)]);
    let lhs = x.transpose() * &wx;
    let rhs = wx.transpose() * y;
    lhs.lu().solve(&rhs).expect("singular normal equations")
}

fn formula_oracles() -> Outcome {
    let mut wls_err: f64 = 0.0;
    let mut homo_err: f64 = 0.0;
    let mut hetero_err: f64 = 0.0;
    for case in 0..20 {
        let mut rng = Stream::new(55, case);
        let m = 50 + rng.below(450);
        let q = 1 + rng.below(5);
        let p = 1 + rng.below(3);
        let stats = random_matrix(&mut rng, m, q);
        let mut theta = random_matrix(&mut rng, m, p);
        for i in 0..m {
            for k in 0..p {
                let scale = 1.0 + stats[(i, 0)].abs();
                theta[(i, k)] = theta[(i, k)] * scale + (k as f64 + 1.0) * stats[(i, q - 1)];
            }
        }
        let w = random_weights(&mut rng, m);
        let obs = ObservedSummaries::new((0..q).map(|_| rng.normal()).collect()).unwrap();

        let model = fit_wls_linear(&stats, &theta, &w).unwrap();
        let sol = normal_equations(&stats, &theta, &w);
        let (alpha, beta) = (model.intercept().unwrap(), model.coefficients().unwrap());
        for k in 0..p {
            wls_err = wls_err.max((alpha[k] - sol[(0, k)]).abs());
            for j in 0..q {
                wls_err = wls_err.max((beta[(k, j)] - sol[(j + 1, k)]).abs());
            }
        }

        let sample = WeightedSample::from_raw(&theta, &w, SampleLabel::Rejection).unwrap();
        let linear = |a: &[f64], b: &Matrix, k: usize, s: &[f64]| {
            let mut v = a[k];
            for j in 0..s.len() {
                v += b[(k, j)] * s[j];
            }
            v
        };
        let homo = adjust_homoscedastic(&sample, &model, &stats, &obs).unwrap();
        let resid = model.residuals(&stats, &theta).unwrap();
        let var = fit_log_variance(&stats, &resid, &w, &VarianceKind::Linear).unwrap();
        let hetero = adjust_heteroscedastic(&sample, &model, &var, &stats, &obs).unwrap();
        for k in 0..p {
            let vm = &var.models()[k];
            let (va, vb) = (vm.intercept().unwrap(), vm.coefficients().unwrap());
            let sd = |s: &[f64]| (0.5 * linear(va, vb, 0, s)).exp();
            let at_obs = linear(alpha, beta, k, obs.values());
            for i in 0..m {
                let s = stats.row(i);
                let r = theta[(i, k)] - linear(alpha, beta, k, s);
                homo_err = homo_err.max((homo.values()[(i, k)] - (at_obs + r)).abs());
                let h = at_obs + sd(obs.values()) / sd(s) * r;
                hetero_err = hetero_err.max((hetero.values()[(i, k)] - h).abs());
            }
        }
    }

    let mut grad_err: f64 = 0.0;
    for case in 0..10 {
        let mut rng = Stream::new(56, case);
        let (inputs, hidden, outputs) = (1 + rng.below(4), 2 + rng.below(6), 1 + rng.below(2));
        let x = random_matrix(&mut rng, 30, inputs);
        let t = random_matrix(&mut rng, 30, outputs);
        let w = random_weights(&mut rng, 30);
        let l2 = 1e-3 * rng.uniform();
        let net = Mlp::init(inputs, hidden, outputs, case);
        let (_, grad) = net.loss_and_gradient(&x, &t, &w, l2);
        let eps = 1e-6;
        for (idx, g) in grad.iter().enumerate() {
            let mut plus = net.params().to_vec();
            let mut minus = net.params().to_vec();
            plus[idx] += eps;
            minus[idx] -= eps;
            let lp = Mlp::from_params(inputs, hidden, outputs, plus).unwrap().loss(&x, &t, &w, l2);
            let lm = Mlp::from_params(inputs, hidden, outputs, minus).unwrap().loss(&x, &t, &w, l2);
            let fd = (lp - lm) / (2.0 * eps);
            grad_err = grad_err.max((fd - g).abs() / g.abs().max(1e-3));
        }
    }
    outcome(
        wls_err < 1e-10 && homo_err < 1e-12 && hetero_err < 1e-12 && grad_err < 1e-5,
        format!(
            "WLS vs normal equations {wls_err:.1e} (< 1e-10), homoscedastic loop {homo_err:.1e} (< 1e-12), \
             heteroscedastic loop {hetero_err:.1e} (< 1e-12), MLP gradient rel {grad_err:.1e} (< 1e-5)"
        ),
    )
}

fn heteroscedastic_benefit() -> Outcome {
    const LEVELS: [f64; 4] = [0.5, 0.8, 0.9, 0.95];
    let draw = simulate(&ToySpec::new(ToyId::HeteroScale, 1), 10_000).unwrap();
    let table = &draw.table;
    let holdout = choose_holdout(table.n(), 200, 1);
    let reference_rows: Vec<usize> = (0..table.n()).filter(|i| holdout.binary_search(i).is_err()).collect();
    let reference = table.select_rows(&reference_rows).unwrap();
    let cfg = RejectionConfig::with_rate(Kernel::Epanechnikov, 0.1);
    let methods = [MethodSpec::loclinear(false), MethodSpec::loclinear(true)];
    let mut covered = [[0usize; 4]; 2];
    for &row in &holdout {
        let obs = ObservedSummaries::new(table.stats().row(row).to_vec()).unwrap();
        let truth = table.theta()[(row, 0)];
        let rej = reject(&reference, &obs, &cfg).unwrap();
        for (m, method) in methods.iter().enumerate() {
            let adj = adjust_rejection(&reference, &obs, &rej, &method.adjustment(identity(1))).unwrap();
            let summary = summarize(&adj.sample, &LEVELS).unwrap();
            for (l, ci) in summary.intervals.iter().enumerate() {
                if ci.lower[0] <= truth && truth <= ci.upper[0] {
                    covered[m][l] += 1;
                }
            }
        }
    }
    let coverage = |m: usize, l: usize| covered[m][l] as f64 / holdout.len() as f64;
    let calibration =
        |m: usize| LEVELS.iter().enumerate().map(|(l, lv)| (coverage(m, l) - lv).abs()).sum::<f64>() / 4.0;
    let (homo, hetero) = (calibration(0), calibration(1));
    let cov95 = coverage(1, 3);
    outcome(
        (cov95 - 0.95).abs() <= 0.05 && hetero < homo,
        format!(
            "hetero 95% coverage {:.1}% (95 ± 5), calibration error hetero {hetero:.4} < homo {homo:.4} \
             (homo 95% coverage {:.1}%)",
            100.0 * cov95,
            100.0 * coverage(0, 3)
        ),
    )
}

fn transform_support() -> Outcome {
    let spec = TransformSpec::new(vec![Transform::logit(0.0, 1.0).unwrap()]);
    let homo = AdjustmentConfig::homoscedastic(MeanKind::Linear).with_transforms(spec.clone());
    let hetero = AdjustmentConfig::heteroscedastic(MeanKind::Linear, VarianceKind::Linear).with_transforms(spec);
    let mut checked = 0usize;
    let mut outside = 0usize;
    let mut errors = 0usize;
    let mut call = 0u64;
    while checked < 1_000_000 {
        let mut rng = Stream::new(88, call);
        let m = 1000;
        let q = 1 + rng.below(3);
        let theta: Vec<f64> = (0..m)
            .map(|_| match rng.below(10) {
                0 => 10f64.powf(-300.0 * rng.uniform()).max(1e-300),
                1 => 1.0 - 10f64.powf(-16.0 * rng.uniform()).max(f64::EPSILON / 2.0),
                _ => rng.open_uniform(),
            })
            .collect();
        let mut stats = Matrix::zeros(m, q);
        let slope = 10f64.powf(3.0 * rng.normal());
        for i in 0..m {
            let z = (theta[i] / (1.0 - theta[i])).ln();
            for j in 0..q {
                stats[(i, j)] = if j == 0 { slope * z } else { 0.0 } + rng.normal();
            }
        }
        let obs: Vec<f64> = (0..q).map(|_| rng.normal() * 10f64.powf(4.0 * rng.uniform())).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
        let sample = WeightedSample::from_raw(&Matrix::column_vector(&theta), &w, SampleLabel::Rejection).unwrap();
        let cfg = if call & 1 == 0 { &homo } else { &hetero };
        call += 1;
        match adjust(&sample, &stats, &ObservedSummaries::new(obs).unwrap(), cfg) {
            Ok(adj) => {
                for v in adj.sample.values().as_slice() {
                    checked += 1;
                    if !(*v > 0.0 && *v < 1.0) {
                        outside += 1;
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        outside == 0,
        format!("{checked} adjusted values over {call} calls, {outside} outside (0, 1), {errors} calls rejected with an error"),
    )
}

fn bin(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_abc-adjust")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    bin(&["simulate-toy", "--model", "linear_gaussian_multi", "--n", "20000", "--seed", "1", "--out", &p("multi")]);
    bin(&["simulate-toy", "--model", "hetero_scale", "--n", "20000", "--seed", "1", "--out", &p("hetero")]);
    let runs: [(&str, &str, &[&str]); 6] = [
        ("multi", "rejection", &[]),
        ("multi", "loclinear-homo", &[]),
        ("multi", "loclinear-hetero", &[]),
        ("multi", "ridge-hetero", &[]),
        ("multi", "neuralnet-hetero", &["--set", "mlp_epochs=300"]),
        ("hetero", "loclinear-hetero", &["--transform", "logit(0,1)"]),
    ];
    let mut identical = 0;
    for (i, (toy, method, extra)) in runs.iter().enumerate() {
        let read = |out: &Path| {
            ["posterior_sample.csv", "summary.csv"].map(|f| fs::read(out.join(f)).unwrap())
        };
        let outs = [p(&format!("run{i}a")), p(&format!("run{i}b"))];
        for out in &outs {
            let table = p(&format!("{toy}/table.csv"));
            let observed = p(&format!("{toy}/observed.csv"));
            let mut args = vec!["run", "--table", &table, "--observed", &observed, "--method", method];
            args.extend(["--rate", "0.05", "--seed", "9", "--out", out]);
            args.extend_from_slice(extra);
            bin(&args);
        }
        if read(Path::new(&outs[0])) == read(Path::new(&outs[1])) {
            identical += 1;
        }
    }
    outcome(
        identical == runs.len(),
        format!("{identical}/{} configurations gave byte-identical sample and summary files", runs.len()),
    )
}

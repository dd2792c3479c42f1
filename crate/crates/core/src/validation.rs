//! Cross-validation of inference methods, bootstrap error bars and
//! Monte-Carlo error studies on the toy models.

use alloc::string::String;
use alloc::vec::Vec;

use crate::adjustment::TransformSpec;
use crate::data::{ObservedSummaries, SimulationTable};
use crate::math::{self, compensated_sum, CompensatedSum};
use crate::pipeline::{adjust_rejection, MethodSpec};
use crate::posterior::weighted_mean_var;
use crate::rejection::{reject, RejectionConfig};
use crate::rng::{derive_seed, Stream};
use crate::toy::{analytic_posterior, simulate, ToyId, ToySpec};
use crate::{Error, Result};

/// Bootstrap resamples used for the error bars of a [`CvReport`].
pub const CV_BOOTSTRAP_REPLICATES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct CvMethodResult {
    pub method: String,
    /// Mean scaled squared error over successful held-out rows and parameters.
    pub error: f64,
    pub per_parameter: Vec<f64>,
    /// Error of every successful held-out row, averaged over parameters.
    pub point_errors: Vec<f64>,
    pub bootstrap_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub methods: Vec<CvMethodResult>,
    /// Held-out table rows, increasing.
    pub holdout: Vec<usize>,
    /// Held-out rows excluded for every method because some step failed.
    pub failed: Vec<usize>,
    /// Per-parameter scale (sd of θ over the reference rows).
    pub scales: Vec<f64>,
    pub rejection: RejectionConfig,
    pub seed: u64,
    pub bootstrap_replicates: usize,
}

impl CvReport {
    pub fn n_holdout(&self) -> usize {
        self.holdout.len()
    }

    pub fn result(&self, method: &str) -> Option<&CvMethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// `k` distinct indices from `0..n` (partial Fisher–Yates), sorted.
pub fn choose_holdout(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = Stream::new(seed, 0);
    for i in 0..k.min(n) {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k.min(n)].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Treats `n_holdout` rows as pseudo-observations and scores every method's
/// posterior mean against the held-out parameter.
///
/// All held-out rows are removed from the reference table, and every method
/// adjusts the same accepted set for a given row.
pub fn cross_validate(
    table: &SimulationTable,
    methods: &[MethodSpec],
    rejection: &RejectionConfig,
    transforms: &TransformSpec,
    n_holdout: usize,
    seed: u64,
) -> Result<CvReport> {
    let n = table.n();
    if n_holdout == 0 || n_holdout >= n {
        return Err(Error::Config(alloc::format!(
            "number of held-out rows must lie in 1..{n}, got {n_holdout}"
        )));
    }
    if methods.is_empty() {
        return Err(Error::config("no methods to cross-validate"));
    }
    rejection.validate()?;
    let holdout = choose_holdout(n, n_holdout, seed);
    let mut is_held = alloc::vec![false; n];
    for &i in &holdout {
        is_held[i] = true;
    }
    let reference_rows: Vec<usize> = (0..n).filter(|&i| !is_held[i]).collect();
    let reference = table.select_rows(&reference_rows)?;
    let scales = parameter_scales(&reference)?;
    let adjustments: Vec<_> = methods.iter().map(|m| m.adjustment(transforms.clone())).collect();

    let mut failed = Vec::new();
    let mut first_error = None;
    let mut point_errors: Vec<Vec<Vec<f64>>> = alloc::vec![Vec::new(); methods.len()];
    for &row in &holdout {
        let outcome = (|| -> Result<Vec<Vec<f64>>> {
            let obs = ObservedSummaries::new(table.stats().row(row).to_vec())?;
            let rej = reject(&reference, &obs, rejection)?;
            adjustments
                .iter()
                .map(|cfg| {
                    let adj = adjust_rejection(&reference, &obs, &rej, cfg)?;
                    let (mean, _) = weighted_mean_var(&adj.sample);
                    Ok(mean
                        .iter()
                        .zip(table.theta().row(row))
                        .zip(&scales)
                        .map(|((e, t), s)| {
                            let z = (e - t) / s;
                            z * z
                        })
                        .collect())
                })
                .collect()
        })();
        match outcome {
            Ok(errs) => {
                for (acc, e) in point_errors.iter_mut().zip(errs) {
                    acc.push(e);
                }
            }
            Err(e) => {
                failed.push(row);
                first_error.get_or_insert(e);
            }
        }
    }
    if failed.len() == holdout.len() {
        return Err(first_error.unwrap_or(Error::NoAccepted));
    }

    let p = table.p();
    let boot_seed = derive_seed(seed, 1);
    let results = methods
        .iter()
        .zip(point_errors)
        .map(|(m, errs)| {
            let count = errs.len() as f64;
            let per_parameter: Vec<f64> = (0..p)
                .map(|k| compensated_sum(errs.iter().map(|e| e[k])) / count)
                .collect();
            let points: Vec<f64> = errs
                .iter()
                .map(|e| compensated_sum(e.iter().copied()) / p as f64)
                .collect();
            let error = compensated_sum(points.iter().copied()) / count;
            let bootstrap_se = if points.len() >= 2 {
                bootstrap_se(&points, CV_BOOTSTRAP_REPLICATES, boot_seed)?
            } else {
                0.0
            };
            Ok(CvMethodResult {
                method: m.name(),
                error,
                per_parameter,
                point_errors: points,
                bootstrap_se,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CvReport {
        methods: results,
        holdout,
        failed,
        scales,
        rejection: *rejection,
        seed,
        bootstrap_replicates: CV_BOOTSTRAP_REPLICATES,
    })
}

fn parameter_scales(table: &SimulationTable) -> Result<Vec<f64>> {
    let n = table.n();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    (0..table.p())
        .map(|k| {
            let col = table.theta().column(k);
            let mean = compensated_sum(col.iter().copied()) / n as f64;
            let var = compensated_sum(col.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
            let sd = math::sqrt(var);
            if sd > 0.0 {
                Ok(sd)
            } else {
                Err(Error::ZeroVariance(k))
            }
        })
        .collect()
}

/// Standard deviation (divisor `B − 1`) of the mean over `B` bootstrap
/// resamples of `errors`.
pub fn bootstrap_se(errors: &[f64], replicates: usize, seed: u64) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: errors.len(),
        });
    }
    if replicates < 100 {
        return Err(Error::config("bootstrap needs at least 100 replicates"));
    }
    let n = errors.len();
    let mut rng = Stream::new(seed, 0);
    let means: Vec<f64> = (0..replicates)
        .map(|_| {
            let mut acc = CompensatedSum::new();
            for _ in 0..n {
                acc.add(errors[rng.below(n)]);
            }
            acc.value() / n as f64
        })
        .collect();
    let grand = compensated_sum(means.iter().copied()) / replicates as f64;
    let ss = compensated_sum(means.iter().map(|m| (m - grand) * (m - grand)));
    Ok(math::sqrt(ss / (replicates - 1) as f64))
}

/// One cell of an [`mse_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub q: usize,
    pub estimator: String,
    pub mse: f64,
    pub se: f64,
}

/// Monte-Carlo MSE of the posterior-mean estimate against the analytic
/// posterior mean.
///
/// `base` fixes the Gaussian hyperparameters; `q` statistics means the
/// informative mean plus `q − 1` noise statistics. Replicate `r` at size `n`
/// uses the same seed for every `q`, so the informative statistic and the
/// parameters are shared across `q` and only the noise columns differ.
pub fn mse_study(
    base: &ToySpec,
    n_values: &[usize],
    q_values: &[usize],
    methods: &[MethodSpec],
    rejection: &RejectionConfig,
    replicates: usize,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    if base.id == ToyId::HeteroScale {
        return Err(Error::NoAnalyticPosterior(base.id.as_str()));
    }
    if replicates == 0 {
        return Err(Error::config("need at least one replicate"));
    }
    if q_values.contains(&0) {
        return Err(Error::config("q must be at least 1"));
    }
    let adjustments: Vec<_> = methods
        .iter()
        .map(|m| m.adjustment(TransformSpec::new(Vec::new())))
        .collect();
    let mut rows = Vec::new();
    for &n in n_values {
        for &q in q_values {
            let mut sq: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(replicates); methods.len()];
            for r in 0..replicates {
                let mut spec = base.clone();
                spec.id = if q == 1 {
                    ToyId::GaussianConjugate
                } else {
                    ToyId::LinearGaussianMulti
                };
                spec.noise_stats = q - 1;
                spec.seed = derive_seed(derive_seed(seed, n as u64), r as u64);
                let draw = simulate(&spec, n)?;
                let (target, _) = analytic_posterior(&spec, draw.observed.values())?;
                let rej = reject(&draw.table, &draw.observed, rejection)?;
                for (k, cfg) in adjustments.iter().enumerate() {
                    let adj = adjust_rejection(&draw.table, &draw.observed, &rej, cfg)?;
                    let (mean, _) = weighted_mean_var(&adj.sample);
                    let e = mean[0] - target;
                    sq[k].push(e * e);
                }
            }
            for (m, errs) in methods.iter().zip(&sq) {
                let r = errs.len() as f64;
                let mse = compensated_sum(errs.iter().copied()) / r;
                let se = if errs.len() > 1 {
                    let var = compensated_sum(errs.iter().map(|e| (e - mse) * (e - mse))) / (r - 1.0);
                    math::sqrt(var / r)
                } else {
                    0.0
                };
                rows.push(StudyRow {
                    n,
                    q,
                    estimator: m.name(),
                    mse,
                    se,
                });
            }
        }
    }
    Ok(rows)
}

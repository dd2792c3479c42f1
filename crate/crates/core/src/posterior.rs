//! Weighted posterior summaries and marginal kernel density estimates.

use alloc::vec::Vec;

use crate::data::WeightedSample;
use crate::math::{self, compensated_sum};
use crate::rejection::Kernel;
use crate::{Error, Result};

/// Number of grid points used by [`marginal_density`].
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Grid margin around the sample range, in bandwidths.
pub const DEFAULT_GRID_MARGIN: f64 = 3.0;

/// Cumulative weights within this distance of a level count as reaching it.
const LEVEL_SLACK: f64 = 1e-12;

/// Weighted means and variances, per parameter.
pub fn weighted_mean_var(sample: &WeightedSample) -> (Vec<f64>, Vec<f64>) {
    let w = sample.weights();
    let v = sample.values();
    (0..sample.p())
        .map(|k| {
            let mean = compensated_sum((0..v.rows()).map(|i| w[i] * v[(i, k)]));
            let var = compensated_sum((0..v.rows()).map(|i| {
                let d = v[(i, k)] - mean;
                w[i] * d * d
            }));
            (mean, var)
        })
        .unzip()
}

/// Sample indices ordered by value of parameter `param` (ties by index).
fn value_order(sample: &WeightedSample, param: usize) -> Vec<usize> {
    let v = sample.values();
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.sort_by(|&a, &b| v[(a, param)].total_cmp(&v[(b, param)]).then(a.cmp(&b)));
    idx
}

/// Smallest value whose cumulative weight reaches `level`.
pub fn weighted_quantile(sample: &WeightedSample, level: f64, param: usize) -> f64 {
    let order = value_order(sample, param);
    quantile_in_order(sample, &order, level, param)
}

fn quantile_in_order(sample: &WeightedSample, order: &[usize], level: f64, param: usize) -> f64 {
    let w = sample.weights();
    let v = sample.values();
    let mut cum = 0.0;
    for &i in order {
        cum += w[i];
        if cum >= level - LEVEL_SLACK {
            return v[(i, param)];
        }
    }
    v[(order[order.len() - 1], param)]
}

/// Central interval with `level` posterior mass.
pub fn credible_interval(sample: &WeightedSample, level: f64, param: usize) -> (f64, f64) {
    let order = value_order(sample, param);
    let tail = 0.5 * (1.0 - level);
    (
        quantile_in_order(sample, &order, tail, param),
        quantile_in_order(sample, &order, 1.0 - tail, param),
    )
}

/// Weighted Silverman rule `0.9·min(σ, IQR/1.34)·m_eff^(−1/5)`; falls back to
/// `σ` when the interquartile range is zero.
pub fn kde_bandwidth(sample: &WeightedSample, param: usize) -> Result<f64> {
    let (_, var) = weighted_mean_var(sample);
    let sd = math::sqrt(var[param]);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let order = value_order(sample, param);
    let iqr = quantile_in_order(sample, &order, 0.75, param)
        - quantile_in_order(sample, &order, 0.25, param);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * math::pow(sample.effective_size(), -0.2))
}

/// `n` equally spaced points on `[min − margin·h, max + margin·h]`.
pub fn default_grid(sample: &WeightedSample, param: usize, h: f64, margin: f64, n: usize) -> Vec<f64> {
    let col = sample.column(param);
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min) - margin * h;
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max) + margin * h;
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Grid-evaluated marginal posterior density of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDensity {
    pub parameter: usize,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl PosteriorDensity {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    compensated_sum(
        x.windows(2)
            .zip(y.windows(2))
            .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])),
    )
}

/// `π̂(θ) = Σ w_i K((θ_i − θ)/h)/h` on `grid`.
///
/// Terms are accumulated in value order so the result does not depend on
/// the row order of `sample`.
pub fn weighted_kde(
    sample: &WeightedSample,
    param: usize,
    grid: &[f64],
    h: f64,
    kernel: Kernel,
) -> Result<PosteriorDensity> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config("density bandwidth must be positive"));
    }
    if grid.windows(2).any(|g| !(g[1] > g[0])) {
        return Err(Error::config("density grid must be strictly increasing"));
    }
    let v = sample.values();
    let w = sample.weights();
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| {
        v[(a, param)]
            .total_cmp(&v[(b, param)])
            .then(w[a].total_cmp(&w[b]))
    });
    let pts: Vec<(f64, f64)> = order.iter().map(|&i| (v[(i, param)], w[i])).collect();
    let density = grid
        .iter()
        .map(|&x| pts.iter().map(|&(t, wi)| wi * kernel.density((t - x) / h)).sum::<f64>() / h)
        .collect();
    Ok(PosteriorDensity {
        parameter: param,
        grid: grid.to_vec(),
        density,
        bandwidth: h,
        kernel,
    })
}

/// Density with the default bandwidth and grid.
pub fn marginal_density(sample: &WeightedSample, param: usize, kernel: Kernel) -> Result<PosteriorDensity> {
    let h = kde_bandwidth(sample, param)?;
    let grid = default_grid(sample, param, h, DEFAULT_GRID_MARGIN, DEFAULT_GRID_POINTS);
    weighted_kde(sample, param, &grid, h, kernel)
}

/// `var(adjusted)_k / var(rejection)_k` per parameter.
pub fn shrinkage_ratio(adjusted: &WeightedSample, rejection: &WeightedSample) -> Result<Vec<f64>> {
    if adjusted.len() != rejection.len() || adjusted.p() != rejection.p() {
        return Err(Error::DimensionMismatch {
            what: "adjusted sample size",
            expected: rejection.len(),
            found: adjusted.len(),
        });
    }
    let (_, va) = weighted_mean_var(adjusted);
    let (_, vr) = weighted_mean_var(rejection);
    va.iter()
        .zip(&vr)
        .enumerate()
        .map(|(k, (a, r))| {
            if *r > 0.0 {
                Ok(a / r)
            } else {
                Err(Error::ZeroVariance(k))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleInterval {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub median: Vec<f64>,
    pub intervals: Vec<CredibleInterval>,
}

pub fn summarize(sample: &WeightedSample, levels: &[f64]) -> Result<PosteriorSummary> {
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Config(alloc::format!("credible level {l} not in (0, 1)")));
    }
    let (mean, variance) = weighted_mean_var(sample);
    let orders: Vec<Vec<usize>> = (0..sample.p()).map(|k| value_order(sample, k)).collect();
    let median = (0..sample.p())
        .map(|k| quantile_in_order(sample, &orders[k], 0.5, k))
        .collect();
    let intervals = levels
        .iter()
        .map(|&level| {
            let tail = 0.5 * (1.0 - level);
            let (lower, upper) = (0..sample.p())
                .map(|k| {
                    (
                        quantile_in_order(sample, &orders[k], tail, k),
                        quantile_in_order(sample, &orders[k], 1.0 - tail, k),
                    )
                })
                .unzip();
            CredibleInterval { level, lower, upper }
        })
        .collect();
    Ok(PosteriorSummary {
        mean,
        variance,
        median,
        intervals,
    })
}

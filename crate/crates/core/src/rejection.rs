//! Distance computation, bandwidth selection and kernel weighting.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::{ObservedSummaries, SampleLabel, SimulationTable, WeightedSample};
use crate::linalg::Matrix;
use crate::math::{self, ceil_fraction, order_statistic};
use crate::{Error, Result};

/// Consistency constant making the MAD estimate the sd of a normal sample.
pub const MAD_CONSTANT: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Kernel {
    Uniform,
    #[default]
    Epanechnikov,
    Gaussian,
}

impl Kernel {
    /// Rejection weight `K(u)`: `1{|u|≤1}`, `¾(1−u²)1{|u|≤1}` or `exp(−u²/2)`.
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        let a = u.abs();
        match self {
            Kernel::Uniform => {
                if a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Epanechnikov => {
                if a <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => math::exp(-0.5 * u * u),
        }
    }

    /// Kernel normalized to unit integral, for density estimation.
    #[inline]
    pub fn density(self, u: f64) -> f64 {
        match self {
            Kernel::Uniform => 0.5 * self.weight(u),
            Kernel::Epanechnikov => self.weight(u),
            Kernel::Gaussian => {
                self.weight(u) / math::sqrt(2.0 * core::f64::consts::PI)
            }
        }
    }

    /// Half-width of the support in units of the bandwidth (`inf` for Gaussian).
    pub fn support(self) -> f64 {
        match self {
            Kernel::Gaussian => f64::INFINITY,
            _ => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::Uniform => "uniform",
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "rectangular" => Ok(Kernel::Uniform),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "gaussian" => Ok(Kernel::Gaussian),
            other => Err(Error::Config(alloc::format!("unknown kernel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Standardization {
    #[default]
    Mad,
    Sd,
    None,
}

impl Standardization {
    pub fn as_str(self) -> &'static str {
        match self {
            Standardization::Mad => "mad",
            Standardization::Sd => "sd",
            Standardization::None => "none",
        }
    }
}

impl fmt::Display for Standardization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Standardization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mad" => Ok(Standardization::Mad),
            "sd" => Ok(Standardization::Sd),
            "none" => Ok(Standardization::None),
            other => Err(Error::Config(alloc::format!(
                "unknown standardization `{other}`"
            ))),
        }
    }
}

/// Acceptance radius: either the `p`-quantile of the distances or fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Rate(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionConfig {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub standardization: Standardization,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::default(),
            bandwidth: Bandwidth::Rate(0.01),
            standardization: Standardization::default(),
        }
    }
}

impl RejectionConfig {
    pub fn with_rate(kernel: Kernel, rate: f64) -> Self {
        Self {
            kernel,
            bandwidth: Bandwidth::Rate(rate),
            standardization: Standardization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth {
            Bandwidth::Rate(p) if !(p > 0.0 && p <= 1.0) => {
                Err(Error::config("acceptance rate must lie in (0, 1]"))
            }
            Bandwidth::Fixed(h) if !(h > 0.0 && h.is_finite()) => {
                Err(Error::config("bandwidth must be positive and finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Statistics divided column-wise by their scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub stats: Matrix,
    pub obs: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Divides every statistic (and the observation) by its MAD, sd or 1.
pub fn standardize(
    table: &SimulationTable,
    obs: &ObservedSummaries,
    mode: Standardization,
) -> Result<Standardized> {
    let stats = table.stats();
    if obs.len() != stats.cols() {
        return Err(Error::ObservedLength {
            expected: stats.cols(),
            found: obs.len(),
        });
    }
    let scales = column_scales(stats, mode, table.stat_names())?;
    let mut scaled = stats.clone();
    for i in 0..scaled.rows() {
        for (x, s) in scaled.row_mut(i).iter_mut().zip(&scales) {
            *x /= s;
        }
    }
    let obs = obs.values().iter().zip(&scales).map(|(o, s)| o / s).collect();
    Ok(Standardized {
        stats: scaled,
        obs,
        scales,
    })
}

fn column_scales(stats: &Matrix, mode: Standardization, names: &[String]) -> Result<Vec<f64>> {
    let n = stats.rows();
    (0..stats.cols())
        .map(|j| {
            let col = stats.column(j);
            let scale = match mode {
                Standardization::None => return Ok(1.0),
                Standardization::Mad => {
                    let med = math::median(&col);
                    let dev: Vec<f64> = col.iter().map(|x| (x - med).abs()).collect();
                    MAD_CONSTANT * math::median(&dev)
                }
                Standardization::Sd => {
                    if n < 2 {
                        0.0
                    } else {
                        let mean = math::compensated_sum(col.iter().copied()) / n as f64;
                        let ss = math::compensated_sum(col.iter().map(|x| (x - mean) * (x - mean)));
                        math::sqrt(ss / (n - 1) as f64)
                    }
                }
            };
            if scale > 0.0 && scale.is_finite() {
                Ok(scale)
            } else {
                Err(Error::ZeroScale(names[j].clone()))
            }
        })
        .collect()
}

/// Euclidean distance of every row of `stats` to `obs`.
pub fn distances(stats: &Matrix, obs: &[f64]) -> Result<Vec<f64>> {
    if obs.len() != stats.cols() {
        return Err(Error::DimensionMismatch {
            what: "observed statistics",
            expected: stats.cols(),
            found: obs.len(),
        });
    }
    Ok(stats
        .row_iter()
        .map(|row| {
            math::sqrt(
                row.iter()
                    .zip(obs)
                    .map(|(s, o)| (s - o) * (s - o))
                    .sum::<f64>(),
            )
        })
        .collect())
}

/// `h` = the `⌈p·n⌉`-th smallest distance.
pub fn bandwidth_from_rate(distances: &[f64], rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::config("acceptance rate must lie in (0, 1]"));
    }
    if distances.is_empty() {
        return Err(Error::EmptyTable);
    }
    let k = ceil_fraction(rate, distances.len());
    let h = order_statistic(distances, k - 1);
    if h > 0.0 {
        Ok(h)
    } else {
        Err(Error::ZeroBandwidth)
    }
}

/// Raw kernel values `K(d/h)`, zero beyond `h` for every kernel.
pub fn kernel_weights(distances: &[f64], h: f64, kernel: Kernel) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::config("bandwidth must be positive"));
    }
    let w: Vec<f64> = distances
        .iter()
        .map(|&d| if d <= h { kernel.weight(d / h) } else { 0.0 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::NoAccepted);
    }
    Ok(w)
}

/// Result of the rejection step.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutput {
    /// Unadjusted accepted parameters with normalized kernel weights.
    pub sample: WeightedSample,
    /// Table rows with positive weight, increasing.
    pub accepted_indices: Vec<usize>,
    /// Distances of the accepted rows, aligned with `accepted_indices`.
    pub distances: Vec<f64>,
    pub bandwidth: f64,
    pub scales: Vec<f64>,
}

impl RejectionOutput {
    pub fn accepted(&self) -> usize {
        self.accepted_indices.len()
    }

    /// Raw statistics of the accepted rows.
    pub fn accepted_stats(&self, table: &SimulationTable) -> Matrix {
        table.stats().select_rows(&self.accepted_indices)
    }
}

pub fn reject(
    table: &SimulationTable,
    obs: &ObservedSummaries,
    config: &RejectionConfig,
) -> Result<RejectionOutput> {
    config.validate()?;
    let scaled = standardize(table, obs, config.standardization)?;
    let dist = distances(&scaled.stats, &scaled.obs)?;
    let h = match config.bandwidth {
        Bandwidth::Rate(p) => bandwidth_from_rate(&dist, p)?,
        Bandwidth::Fixed(h) => h,
    };
    let raw = kernel_weights(&dist, h, config.kernel)?;
    let accepted_indices: Vec<usize> = (0..raw.len()).filter(|&i| raw[i] > 0.0).collect();
    let sample = WeightedSample::from_raw(table.theta(), &raw, SampleLabel::Rejection)?;
    Ok(RejectionOutput {
        sample,
        distances: accepted_indices.iter().map(|&i| dist[i]).collect(),
        accepted_indices,
        bandwidth: h,
        scales: scaled.scales,
    })
}

//! Generative models with known posteriors, used as correctness oracles.
//!
//! Row `i` of a simulated table is drawn from [`Stream::new(seed, i + 1)`];
//! the observed dataset comes from stream 0. Rows can therefore be generated
//! in any order or in parallel with identical results.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::{ObservedSummaries, SimulationTable};
use crate::linalg::Matrix;
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToyId {
    /// `θ ~ N(μ0, τ0²)`, statistic = mean of `k` draws from `N(θ, σ²)`.
    GaussianConjugate,
    /// As above plus `noise_stats` independent `N(0, 1)` statistics.
    LinearGaussianMulti,
    /// `θ ~ U(0, 1)`, `s ~ N(θ, (0.05 + 0.5θ)²)`.
    HeteroScale,
}

impl ToyId {
    pub fn as_str(self) -> &'static str {
        match self {
            ToyId::GaussianConjugate => "gaussian_conjugate",
            ToyId::LinearGaussianMulti => "linear_gaussian_multi",
            ToyId::HeteroScale => "hetero_scale",
        }
    }
}

impl fmt::Display for ToyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_conjugate" => Ok(ToyId::GaussianConjugate),
            "linear_gaussian_multi" => Ok(ToyId::LinearGaussianMulti),
            "hetero_scale" => Ok(ToyId::HeteroScale),
            other => Err(Error::Config(alloc::format!("unknown toy model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub id: ToyId,
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub noise_sd: f64,
    /// Observations averaged into the statistic.
    pub sample_size: usize,
    pub noise_stats: usize,
    pub seed: u64,
}

impl ToySpec {
    /// `μ0 = 0`, `τ0 = 1`, `σ = 1`, `k = 10`; four noise statistics for
    /// `linear_gaussian_multi`.
    pub fn new(id: ToyId, seed: u64) -> Self {
        Self {
            id,
            prior_mean: 0.0,
            prior_sd: 1.0,
            noise_sd: 1.0,
            sample_size: 10,
            noise_stats: if id == ToyId::LinearGaussianMulti { 4 } else { 0 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_sd > 0.0 && self.prior_sd.is_finite()) {
            return Err(Error::config("prior sd must be positive and finite"));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::config("noise sd must be positive and finite"));
        }
        if !self.prior_mean.is_finite() {
            return Err(Error::config("prior mean must be finite"));
        }
        if self.sample_size == 0 {
            return Err(Error::config("sample size must be at least 1"));
        }
        if self.id != ToyId::LinearGaussianMulti && self.noise_stats != 0 {
            return Err(Error::config("only linear_gaussian_multi takes noise statistics"));
        }
        Ok(())
    }

    /// Number of summary statistics.
    pub fn q(&self) -> usize {
        match self.id {
            ToyId::LinearGaussianMulti => 1 + self.noise_stats,
            _ => 1,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        alloc::vec!["theta".to_string()]
    }

    pub fn stat_names(&self) -> Vec<String> {
        let mut names = alloc::vec!["mean".to_string()];
        names.extend((1..=self.q() - 1).map(|j| alloc::format!("noise{j}")));
        names
    }

    fn draw_row(&self, rng: &mut Stream, stats: &mut [f64]) -> f64 {
        match self.id {
            ToyId::GaussianConjugate | ToyId::LinearGaussianMulti => {
                let theta = self.prior_mean + self.prior_sd * rng.normal();
                let total: f64 = (0..self.sample_size)
                    .map(|_| theta + self.noise_sd * rng.normal())
                    .sum();
                stats[0] = total / self.sample_size as f64;
                for s in &mut stats[1..] {
                    *s = rng.normal();
                }
                theta
            }
            ToyId::HeteroScale => {
                let theta = rng.open_uniform();
                stats[0] = theta + (0.05 + 0.5 * theta) * rng.normal();
                theta
            }
        }
    }
}

/// A simulated reference table together with one observed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDraw {
    pub table: SimulationTable,
    pub observed: ObservedSummaries,
    /// Parameter that generated `observed`.
    pub truth: Vec<f64>,
}

pub fn simulate(spec: &ToySpec, n: usize) -> Result<ToyDraw> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::config("number of simulations must be at least 1"));
    }
    let q = spec.q();
    let mut theta = Matrix::zeros(n, 1);
    let mut stats = Matrix::zeros(n, q);
    for i in 0..n {
        let mut rng = Stream::new(spec.seed, i as u64 + 1);
        theta[(i, 0)] = spec.draw_row(&mut rng, stats.row_mut(i));
    }
    let mut obs = alloc::vec![0.0; q];
    let truth = spec.draw_row(&mut Stream::new(spec.seed, 0), &mut obs);
    Ok(ToyDraw {
        table: SimulationTable::new(theta, stats, spec.param_names(), spec.stat_names())?,
        observed: ObservedSummaries::new(obs)?,
        truth: alloc::vec![truth],
    })
}

/// Closed-form posterior `(mean, variance)` of θ given the first statistic.
pub fn analytic_posterior(spec: &ToySpec, s_obs: &[f64]) -> Result<(f64, f64)> {
    spec.validate()?;
    if spec.id == ToyId::HeteroScale {
        return Err(Error::NoAnalyticPosterior(spec.id.as_str()));
    }
    let s = *s_obs.first().ok_or(Error::ObservedLength {
        expected: spec.q(),
        found: 0,
    })?;
    let prior_prec = 1.0 / (spec.prior_sd * spec.prior_sd);
    let data_prec = spec.sample_size as f64 / (spec.noise_sd * spec.noise_sd);
    let prec = prior_prec + data_prec;
    Ok(((prior_prec * spec.prior_mean + data_prec * s) / prec, 1.0 / prec))
}

//! Reference tables, observed statistics and weighted parameter samples.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Matrix;
use crate::math::compensated_sum;
use crate::{Error, Result};

/// `n` simulations of `p` parameters and `q` summary statistics, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTable {
    theta: Matrix,
    stats: Matrix,
    param_names: Vec<String>,
    stat_names: Vec<String>,
}

impl SimulationTable {
    /// Validates shapes and rejects non-finite entries.
    pub fn new(
        theta: Matrix,
        stats: Matrix,
        param_names: Vec<String>,
        stat_names: Vec<String>,
    ) -> Result<Self> {
        if theta.rows() == 0 {
            return Err(Error::EmptyTable);
        }
        if theta.cols() == 0 {
            return Err(Error::NoColumns("parameter"));
        }
        if stats.cols() == 0 {
            return Err(Error::NoColumns("statistic"));
        }
        if stats.rows() != theta.rows() {
            return Err(Error::DimensionMismatch {
                what: "statistic rows",
                expected: theta.rows(),
                found: stats.rows(),
            });
        }
        if param_names.len() != theta.cols() {
            return Err(Error::DimensionMismatch {
                what: "parameter names",
                expected: theta.cols(),
                found: param_names.len(),
            });
        }
        if stat_names.len() != stats.cols() {
            return Err(Error::DimensionMismatch {
                what: "statistic names",
                expected: stats.cols(),
                found: stat_names.len(),
            });
        }
        for (m, names) in [(&theta, &param_names), (&stats, &stat_names)] {
            for (i, row) in m.row_iter().enumerate() {
                if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        row: i,
                        column: names[j].clone(),
                    });
                }
            }
        }
        Ok(Self {
            theta,
            stats,
            param_names,
            stat_names,
        })
    }

    /// Table with generated column names `theta{j}` / `s{j}`.
    pub fn unnamed(theta: Matrix, stats: Matrix) -> Result<Self> {
        let p = (0..theta.cols()).map(|j| alloc::format!("theta{j}")).collect();
        let q = (0..stats.cols()).map(|j| alloc::format!("s{j}")).collect();
        Self::new(theta, stats, p, q)
    }

    pub fn n(&self) -> usize {
        self.theta.rows()
    }

    pub fn p(&self) -> usize {
        self.theta.cols()
    }

    pub fn q(&self) -> usize {
        self.stats.cols()
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn stats(&self) -> &Matrix {
        &self.stats
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn stat_names(&self) -> &[String] {
        &self.stat_names
    }

    /// Sub-table restricted to `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.theta.select_rows(indices),
            self.stats.select_rows(indices),
            self.param_names.clone(),
            self.stat_names.clone(),
        )
    }
}

/// Observed summary statistics, validated against a table.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSummaries {
    values: Vec<f64>,
}

impl ObservedSummaries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks finiteness only; use [`validate_observed`] to also check length.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteObserved(i));
        }
        Ok(Self { values })
    }
}

pub fn validate_observed(table: &SimulationTable, raw: &[f64]) -> Result<ObservedSummaries> {
    if raw.len() != table.q() {
        return Err(Error::ObservedLength {
            expected: table.q(),
            found: raw.len(),
        });
    }
    ObservedSummaries::new(raw.to_vec())
}

/// Where a weighted sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleLabel {
    Rejection,
    Homoscedastic,
    Heteroscedastic,
}

impl SampleLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleLabel::Rejection => "rejection",
            SampleLabel::Homoscedastic => "homoscedastic",
            SampleLabel::Heteroscedastic => "heteroscedastic",
        }
    }
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for SampleLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejection" => Ok(SampleLabel::Rejection),
            "homoscedastic" => Ok(SampleLabel::Homoscedastic),
            "heteroscedastic" => Ok(SampleLabel::Heteroscedastic),
            other => Err(Error::Config(alloc::format!("unknown sample label `{other}`"))),
        }
    }
}

/// Parameter draws with normalized, strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Matrix,
    weights: Vec<f64>,
    label: SampleLabel,
}

impl WeightedSample {
    /// Keeps the rows with positive raw weight and normalizes their weights.
    pub fn from_raw(values: &Matrix, raw_weights: &[f64], label: SampleLabel) -> Result<Self> {
        if raw_weights.len() != values.rows() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: values.rows(),
                found: raw_weights.len(),
            });
        }
        if raw_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights);
        }
        let keep: Vec<usize> = (0..raw_weights.len())
            .filter(|&i| raw_weights[i] > 0.0)
            .collect();
        if keep.is_empty() {
            return Err(Error::NoAccepted);
        }
        let kept: Vec<f64> = keep.iter().map(|&i| raw_weights[i]).collect();
        Ok(Self {
            values: values.select_rows(&keep),
            weights: normalize(&kept),
            label,
        })
    }

    /// Same weights and label semantics, new values (used by adjustment).
    pub fn with_values(&self, values: Matrix, label: SampleLabel) -> Result<Self> {
        if values.rows() != self.values.rows() || values.cols() != self.values.cols() {
            return Err(Error::DimensionMismatch {
                what: "adjusted sample rows",
                expected: self.values.rows(),
                found: values.rows(),
            });
        }
        Ok(Self {
            values,
            weights: self.weights.clone(),
            label,
        })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> SampleLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn p(&self) -> usize {
        self.values.cols()
    }

    /// Draws of parameter `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    /// Effective sample size `1 / Σ w²`.
    pub fn effective_size(&self) -> f64 {
        1.0 / compensated_sum(self.weights.iter().map(|w| w * w))
    }
}

fn normalize(raw: &[f64]) -> Vec<f64> {
    let total = compensated_sum(raw.iter().copied());
    raw.iter().map(|w| w / total).collect()
}

/// How one parameter is reparameterised around the regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    None,
    Log,
    Logit { lower: f64, upper: f64 },
}

impl Transform {
    pub fn logit(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::config("logit transform needs finite bounds with lower < upper"));
        }
        Ok(Transform::Logit { lower, upper })
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::None => f.write_str("none"),
            Transform::Log => f.write_str("log"),
            Transform::Logit { lower, upper } => write!(f, "logit({lower:?},{upper:?})"),
        }
    }
}

impl core::str::FromStr for Transform {
    type Err = Error;

    /// Parses `none`, `log` or `logit(lower,upper)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => Ok(Transform::None),
            "log" => Ok(Transform::Log),
            _ => {
                let inner = s
                    .strip_prefix("logit(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Config(alloc::format!("unknown transform `{s}`")))?;
                let (lo, hi) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::config("logit needs two bounds"))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(alloc::format!("bad logit bound `{v}`")))
                };
                Transform::logit(parse(lo)?, parse(hi)?)
            }
        }
    }
}

/// One [`Transform`] per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    kinds: Vec<Transform>,
}

impl TransformSpec {
    pub fn new(kinds: Vec<Transform>) -> Self {
        Self { kinds }
    }

    pub fn identity(p: usize) -> Self {
        Self {
            kinds: alloc::vec![Transform::None; p],
        }
    }

    pub fn kinds(&self) -> &[Transform] {
        &self.kinds
    }

    pub fn is_identity(&self) -> bool {
        self.kinds.iter().all(|k| *k == Transform::None)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.kinds.iter().map(|k| k.to_string()).collect();
        parts.join(";")
    }
}

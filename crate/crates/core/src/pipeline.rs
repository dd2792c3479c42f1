//! Rejection followed by adjustment, and the method vocabulary shared by the
//! front ends and the validation studies.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::adjustment::{adjust, Adjusted, AdjustmentConfig, TransformSpec};
use crate::data::{ObservedSummaries, SimulationTable, WeightedSample};
use crate::regression::{MeanKind, MlpConfig, VarianceKind};
use crate::rejection::{reject, RejectionConfig, RejectionOutput};
use crate::{Error, Result};

/// Default ridge penalty when a method name does not give one.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub rejection: RejectionConfig,
    pub adjustment: AdjustmentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub rejection: RejectionOutput,
    pub adjusted: Adjusted,
}

impl Inference {
    /// Final weighted posterior sample.
    pub fn posterior(&self) -> &WeightedSample {
        &self.adjusted.sample
    }
}

pub fn infer(
    table: &SimulationTable,
    obs: &ObservedSummaries,
    config: &InferenceConfig,
) -> Result<Inference> {
    let rejection = reject(table, obs, &config.rejection)?;
    let adjusted = adjust_rejection(table, obs, &rejection, &config.adjustment)?;
    Ok(Inference {
        rejection,
        adjusted,
    })
}

/// Adjusts an existing rejection output (lets several methods share one
/// accepted set).
pub fn adjust_rejection(
    table: &SimulationTable,
    obs: &ObservedSummaries,
    rejection: &RejectionOutput,
    config: &AdjustmentConfig,
) -> Result<Adjusted> {
    let stats = rejection.accepted_stats(table);
    adjust(&rejection.sample, &stats, obs, config)
}

/// Regression family of a method.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Rejection,
    LocLinear,
    Ridge { lambda: f64 },
    NeuralNet(MlpConfig),
}

/// A named inference method: `rejection`, or `loclinear` / `ridge` /
/// `neuralnet` with a `-homo` (default) or `-hetero` suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub family: Family,
    pub heteroscedastic: bool,
}

impl MethodSpec {
    pub fn rejection() -> Self {
        Self {
            family: Family::Rejection,
            heteroscedastic: false,
        }
    }

    pub fn loclinear(heteroscedastic: bool) -> Self {
        Self {
            family: Family::LocLinear,
            heteroscedastic,
        }
    }

    pub fn name(&self) -> String {
        let base = match self.family {
            Family::Rejection => return String::from("rejection"),
            Family::LocLinear => "loclinear",
            Family::Ridge { .. } => "ridge",
            Family::NeuralNet(_) => "neuralnet",
        };
        let suffix = if self.heteroscedastic { "hetero" } else { "homo" };
        alloc::format!("{base}-{suffix}")
    }

    /// Adjustment settings; heteroscedastic variants model the log-variance
    /// with the same family (linear for `loclinear`/`ridge`).
    pub fn adjustment(&self, transforms: TransformSpec) -> AdjustmentConfig {
        let (mean, variance) = match &self.family {
            Family::Rejection => return AdjustmentConfig::rejection_only().with_transforms(transforms),
            Family::LocLinear => (MeanKind::Linear, VarianceKind::Linear),
            Family::Ridge { lambda } => (MeanKind::Ridge { lambda: *lambda }, VarianceKind::Linear),
            Family::NeuralNet(cfg) => (MeanKind::Mlp(cfg.clone()), VarianceKind::Mlp(cfg.clone())),
        };
        let cfg = if self.heteroscedastic {
            AdjustmentConfig::heteroscedastic(mean, variance)
        } else {
            AdjustmentConfig::homoscedastic(mean)
        };
        cfg.with_transforms(transforms)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, heteroscedastic) = if let Some(b) = s.strip_suffix("-hetero") {
            (b, true)
        } else if let Some(b) = s.strip_suffix("-homo") {
            (b, false)
        } else {
            (s, false)
        };
        let family = match base {
            "rejection" if !heteroscedastic => Family::Rejection,
            "loclinear" => Family::LocLinear,
            "ridge" => Family::Ridge {
                lambda: DEFAULT_RIDGE_LAMBDA,
            },
            "neuralnet" => Family::NeuralNet(MlpConfig::default()),
            _ => return Err(Error::Config(alloc::format!("unknown method `{s}`"))),
        };
        Ok(Self {
            family,
            heteroscedastic,
        })
    }
}

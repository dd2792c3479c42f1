//! Regression adjustment of accepted parameters, optionally inside a log or
//! logit reparameterisation.
//!
//! Homoscedastic: `θc = m̂(s_obs) + (θ − m̂(s))`.
//! Heteroscedastic: `θc = m̂(s_obs) + σ̂(s_obs)/σ̂(s) · (θ − m̂(s))`.

use alloc::vec::Vec;

pub use crate::data::{Transform, TransformSpec};
use crate::data::{ObservedSummaries, SampleLabel, WeightedSample};
use crate::linalg::Matrix;
use crate::math;
use crate::regression::{
    fit_log_variance, fit_mean, MeanKind, RegressionModel, VarianceKind, VarianceModel,
};
use crate::{Error, Result};

/// `σ̂(s_i)` may not fall below this fraction of `σ̂(s_obs)`.
pub const SIGMA_RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdjustMode {
    None,
    Homoscedastic,
    Heteroscedastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentConfig {
    pub mode: AdjustMode,
    pub mean: MeanKind,
    /// Required iff `mode` is heteroscedastic.
    pub variance: Option<VarianceKind>,
    /// Empty means no transform for any parameter.
    pub transforms: TransformSpec,
}

impl AdjustmentConfig {
    pub fn rejection_only() -> Self {
        Self {
            mode: AdjustMode::None,
            mean: MeanKind::Linear,
            variance: None,
            transforms: TransformSpec::new(Vec::new()),
        }
    }

    pub fn homoscedastic(mean: MeanKind) -> Self {
        Self {
            mode: AdjustMode::Homoscedastic,
            mean,
            variance: None,
            transforms: TransformSpec::new(Vec::new()),
        }
    }

    pub fn heteroscedastic(mean: MeanKind, variance: VarianceKind) -> Self {
        Self {
            mode: AdjustMode::Heteroscedastic,
            mean,
            variance: Some(variance),
            transforms: TransformSpec::new(Vec::new()),
        }
    }

    pub fn with_transforms(mut self, transforms: TransformSpec) -> Self {
        self.transforms = transforms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == AdjustMode::Heteroscedastic && self.variance.is_none() {
            return Err(Error::config("heteroscedastic adjustment needs a variance model"));
        }
        Ok(())
    }
}

fn spec_for(spec: &TransformSpec, p: usize) -> Result<Vec<Transform>> {
    if spec.is_empty() {
        return Ok(alloc::vec![Transform::None; p]);
    }
    if spec.len() != p {
        return Err(Error::DimensionMismatch {
            what: "transforms",
            expected: p,
            found: spec.len(),
        });
    }
    Ok(spec.kinds().to_vec())
}

/// `φ = log θ`, `φ = log((θ−l)/(u−θ))` or `φ = θ`, per column.
pub fn transform_forward(theta: &Matrix, spec: &TransformSpec) -> Result<Matrix> {
    let kinds = spec_for(spec, theta.cols())?;
    let mut phi = theta.clone();
    for i in 0..phi.rows() {
        for (j, v) in phi.row_mut(i).iter_mut().enumerate() {
            let x = *v;
            *v = match kinds[j] {
                Transform::None => x,
                Transform::Log => {
                    if !(x > 0.0 && x.is_finite()) {
                        return Err(Error::OutsideSupport { row: i, column: j });
                    }
                    math::ln(x)
                }
                Transform::Logit { lower, upper } => {
                    if !(x > lower && x < upper) {
                        return Err(Error::OutsideSupport { row: i, column: j });
                    }
                    math::ln((x - lower) / (upper - x))
                }
            };
        }
    }
    Ok(phi)
}

fn logistic(phi: f64) -> f64 {
    if phi >= 0.0 {
        1.0 / (1.0 + math::exp(-phi))
    } else {
        let e = math::exp(phi);
        e / (1.0 + e)
    }
}

/// Inverse of [`transform_forward`]. Values that would reach a support
/// endpoint are pulled back inside by an epsilon-scaled margin.
pub fn transform_back(phi: &Matrix, spec: &TransformSpec) -> Result<Matrix> {
    let kinds = spec_for(spec, phi.cols())?;
    let mut theta = phi.clone();
    for i in 0..theta.rows() {
        for (j, v) in theta.row_mut(i).iter_mut().enumerate() {
            *v = back_one(*v, kinds[j]);
        }
    }
    Ok(theta)
}

fn back_one(phi: f64, kind: Transform) -> f64 {
    match kind {
        Transform::None => phi,
        Transform::Log => {
            let x = math::exp(phi);
            if x == 0.0 {
                f64::from_bits(1)
            } else if x.is_infinite() {
                f64::MAX
            } else {
                x
            }
        }
        Transform::Logit { lower, upper } => {
            let width = upper - lower;
            let x = lower + width * logistic(phi);
            let margin = width * f64::EPSILON;
            if x <= lower {
                let y = lower + margin;
                if y > lower { y } else { lower.next_up() }
            } else if x >= upper {
                let y = upper - margin;
                if y < upper { y } else { upper.next_down() }
            } else {
                x
            }
        }
    }
}

fn check_shapes(sample: &WeightedSample, model_out: usize, stats: &Matrix) -> Result<()> {
    if stats.rows() != sample.len() {
        return Err(Error::DimensionMismatch {
            what: "accepted statistic rows",
            expected: sample.len(),
            found: stats.rows(),
        });
    }
    if model_out != sample.p() {
        return Err(Error::DimensionMismatch {
            what: "model outputs",
            expected: sample.p(),
            found: model_out,
        });
    }
    Ok(())
}

/// Homoscedastic adjustment of `sample` (already in the model's scale).
pub fn adjust_homoscedastic(
    sample: &WeightedSample,
    model: &RegressionModel,
    stats: &Matrix,
    obs: &ObservedSummaries,
) -> Result<WeightedSample> {
    check_shapes(sample, model.outputs(), stats)?;
    let at_obs = model.predict(&Matrix::from_rows(&[obs.values()])?)?;
    let fitted = model.predict(stats)?;
    let mut out = sample.values().clone();
    for i in 0..out.rows() {
        for (k, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = at_obs[(0, k)] + (*v - fitted[(i, k)]);
        }
    }
    sample.with_values(out, SampleLabel::Homoscedastic)
}

/// Heteroscedastic adjustment of `sample` (already in the model's scale).
pub fn adjust_heteroscedastic(
    sample: &WeightedSample,
    mean: &RegressionModel,
    variance: &VarianceModel,
    stats: &Matrix,
    obs: &ObservedSummaries,
) -> Result<WeightedSample> {
    check_shapes(sample, mean.outputs(), stats)?;
    check_shapes(sample, variance.parameters(), stats)?;
    let obs_row = Matrix::from_rows(&[obs.values()])?;
    let at_obs = mean.predict(&obs_row)?;
    let sigma_obs = variance.sigma(&obs_row)?;
    let fitted = mean.predict(stats)?;
    let sigma = variance.sigma(stats)?;
    let mut out = sample.values().clone();
    for i in 0..out.rows() {
        for (k, v) in out.row_mut(i).iter_mut().enumerate() {
            let so = sigma_obs[(0, k)];
            let si = sigma[(i, k)];
            if !(si >= SIGMA_RATIO_FLOOR * so) || !so.is_finite() || !si.is_finite() {
                return Err(Error::VarianceFloor(i));
            }
            *v = at_obs[(0, k)] + (so / si) * (*v - fitted[(i, k)]);
        }
    }
    sample.with_values(out, SampleLabel::Heteroscedastic)
}

/// Adjusted sample with the models that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjusted {
    pub sample: WeightedSample,
    pub mean_model: Option<RegressionModel>,
    pub variance_model: Option<VarianceModel>,
}

/// Transform, fit, adjust, back-transform.
///
/// `stats` are the raw statistics of the accepted rows, aligned with
/// `sample`.
pub fn adjust(
    sample: &WeightedSample,
    stats: &Matrix,
    obs: &ObservedSummaries,
    config: &AdjustmentConfig,
) -> Result<Adjusted> {
    config.validate()?;
    if config.mode == AdjustMode::None {
        return Ok(Adjusted {
            sample: sample.clone(),
            mean_model: None,
            variance_model: None,
        });
    }
    let phi = transform_forward(sample.values(), &config.transforms)?;
    let in_scale = sample.with_values(phi.clone(), sample.label())?;
    let mean = fit_mean(&config.mean, stats, &phi, sample.weights())?;
    let (adjusted, variance) = match config.mode {
        AdjustMode::Homoscedastic => (adjust_homoscedastic(&in_scale, &mean, stats, obs)?, None),
        _ => {
            let kind = config.variance.as_ref().ok_or_else(|| {
                Error::config("heteroscedastic adjustment needs a variance model")
            })?;
            let resid = mean.residuals(stats, &phi)?;
            let var = fit_log_variance(stats, &resid, sample.weights(), kind)?;
            (
                adjust_heteroscedastic(&in_scale, &mean, &var, stats, obs)?,
                Some(var),
            )
        }
    };
    let back = transform_back(adjusted.values(), &config.transforms)?;
    Ok(Adjusted {
        sample: adjusted.with_values(back, adjusted.label())?,
        mean_model: Some(mean),
        variance_model: variance,
    })
}

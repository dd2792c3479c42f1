//! Conditional mean and conditional log-variance models fitted by weighted
//! least squares.
//!
//! All models standardize the statistics internally (weighted mean and sd,
//! recorded in the model) and accept statistics in original units at
//! prediction time. Affine models store their coefficients in original
//! units, so `predict(s) = α + β·s` holds exactly.

mod mlp;

use alloc::vec;
use alloc::vec::Vec;

pub use mlp::{Mlp, MlpConfig};

use crate::linalg::{least_squares, Matrix};
use crate::math::{self, compensated_sum};
use crate::{Error, Result};

/// Squared residuals below this value are clamped before taking logs.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// Family used for the conditional mean.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanKind {
    Linear,
    Ridge { lambda: f64 },
    Mlp(MlpConfig),
}

/// Family used for the conditional log-variance.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceKind {
    Linear,
    Mlp(MlpConfig),
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Affine {
        /// α, length p.
        intercept: Vec<f64>,
        /// β, p×q, original statistic units.
        coef: Matrix,
    },
    Network {
        net: Mlp,
        out_center: Vec<f64>,
        out_scale: Vec<f64>,
        loss_history: Vec<f64>,
    },
}

/// Fitted conditional-mean model `m̂(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    kind: MeanKind,
    center: Vec<f64>,
    scale: Vec<f64>,
    body: Body,
}

/// Weighted column means and sds; a zero sd is recorded as 1.
struct Scaling {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaling {
    fn weighted(x: &Matrix, w: &[f64]) -> Self {
        let (center, scale) = (0..x.cols())
            .map(|j| {
                let mean = compensated_sum((0..x.rows()).map(|i| w[i] * x[(i, j)]));
                let var = compensated_sum((0..x.rows()).map(|i| {
                    let d = x[(i, j)] - mean;
                    w[i] * d * d
                }));
                let sd = math::sqrt(var);
                (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
            })
            .unzip();
        Self { center, scale }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut z = x.clone();
        for i in 0..z.rows() {
            for (j, v) in z.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.center[j]) / self.scale[j];
            }
        }
        z
    }
}

/// Validated, positive-weight training rows with weights summing to one.
struct Training {
    stats: Matrix,
    theta: Matrix,
    weights: Vec<f64>,
}

impl Training {
    fn new(stats: &Matrix, theta: &Matrix, weights: &[f64]) -> Result<Self> {
        if theta.rows() != stats.rows() {
            return Err(Error::DimensionMismatch {
                what: "response rows",
                expected: stats.rows(),
                found: theta.rows(),
            });
        }
        if weights.len() != stats.rows() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: stats.rows(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights);
        }
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if keep.is_empty() {
            return Err(Error::NoAccepted);
        }
        let total = compensated_sum(keep.iter().map(|&i| weights[i]));
        Ok(Self {
            stats: stats.select_rows(&keep),
            theta: theta.select_rows(&keep),
            weights: keep.iter().map(|&i| weights[i] / total).collect(),
        })
    }

    fn rows(&self) -> usize {
        self.weights.len()
    }
}

/// Weighted least-squares fit of `θ ≈ α + β s`, with an optional ridge
/// penalty `λ‖β‖²` on the original-unit slopes.
fn fit_affine(data: &Training, lambda: f64) -> Result<(Scaling, Vec<f64>, Matrix)> {
    let (m, q, p) = (data.rows(), data.stats.cols(), data.theta.cols());
    let scaling = Scaling::weighted(&data.stats, &data.weights);
    let z = scaling.apply(&data.stats);
    let extra = if lambda > 0.0 { q } else { 0 };
    let mut design = Matrix::zeros(m + extra, q + 1);
    let mut rhs = Matrix::zeros(m + extra, p);
    for i in 0..m {
        let sw = math::sqrt(data.weights[i]);
        design[(i, 0)] = sw;
        for j in 0..q {
            design[(i, j + 1)] = sw * z[(i, j)];
        }
        for k in 0..p {
            rhs[(i, k)] = sw * data.theta[(i, k)];
        }
    }
    // In standardized units the slope is γ_j = β_j·scale_j, so the penalty
    // λβ_j² becomes (√λ / scale_j)² γ_j².
    for j in 0..extra {
        design[(m + j, j + 1)] = math::sqrt(lambda) / scaling.scale[j];
    }
    let sol = least_squares(&design, &rhs)?;
    let mut coef = Matrix::zeros(p, q);
    let mut intercept = vec![0.0; p];
    for k in 0..p {
        let mut a = sol[(0, k)];
        for j in 0..q {
            let b = sol[(j + 1, k)] / scaling.scale[j];
            coef[(k, j)] = b;
            a -= b * scaling.center[j];
        }
        intercept[k] = a;
    }
    Ok((scaling, intercept, coef))
}

/// Exact minimizer of `Σ w_i ‖θ_i − α − β s_i‖²` over affine maps.
pub fn fit_wls_linear(stats: &Matrix, theta: &Matrix, weights: &[f64]) -> Result<RegressionModel> {
    let data = Training::new(stats, theta, weights)?;
    let needed = stats.cols() + 2;
    if data.rows() < needed {
        return Err(Error::InsufficientRows {
            needed,
            found: data.rows(),
        });
    }
    let (scaling, intercept, coef) = fit_affine(&data, 0.0)?;
    Ok(RegressionModel {
        kind: MeanKind::Linear,
        center: scaling.center,
        scale: scaling.scale,
        body: Body::Affine { intercept, coef },
    })
}

/// Weighted least squares plus `λ‖β‖²`; the intercept is not penalized.
pub fn fit_ridge(
    stats: &Matrix,
    theta: &Matrix,
    weights: &[f64],
    lambda: f64,
) -> Result<RegressionModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::config("ridge penalty must be finite and non-negative"));
    }
    let data = Training::new(stats, theta, weights)?;
    let (scaling, intercept, coef) = fit_affine(&data, lambda)?;
    Ok(RegressionModel {
        kind: MeanKind::Ridge { lambda },
        center: scaling.center,
        scale: scaling.scale,
        body: Body::Affine { intercept, coef },
    })
}

/// One-hidden-layer tanh network trained on the weighted squared loss.
pub fn fit_mlp(
    stats: &Matrix,
    theta: &Matrix,
    weights: &[f64],
    config: &MlpConfig,
) -> Result<RegressionModel> {
    config.validate()?;
    let data = Training::new(stats, theta, weights)?;
    let scaling = Scaling::weighted(&data.stats, &data.weights);
    let z = scaling.apply(&data.stats);
    let out = Scaling::weighted(&data.theta, &data.weights);
    let t = out.apply(&data.theta);
    let (net, loss_history) = mlp::train(&z, &t, &data.weights, config)?;
    Ok(RegressionModel {
        kind: MeanKind::Mlp(config.clone()),
        center: scaling.center,
        scale: scaling.scale,
        body: Body::Network {
            net,
            out_center: out.center,
            out_scale: out.scale,
            loss_history,
        },
    })
}

/// Dispatches on `kind`.
pub fn fit_mean(
    kind: &MeanKind,
    stats: &Matrix,
    theta: &Matrix,
    weights: &[f64],
) -> Result<RegressionModel> {
    match kind {
        MeanKind::Linear => fit_wls_linear(stats, theta, weights),
        MeanKind::Ridge { lambda } => fit_ridge(stats, theta, weights, *lambda),
        MeanKind::Mlp(cfg) => fit_mlp(stats, theta, weights, cfg),
    }
}

impl RegressionModel {
    /// Builds an affine model directly from `α` (length p) and `β` (p×q).
    pub fn affine(intercept: Vec<f64>, coef: Matrix) -> Result<Self> {
        if intercept.len() != coef.rows() {
            return Err(Error::DimensionMismatch {
                what: "intercept length",
                expected: coef.rows(),
                found: intercept.len(),
            });
        }
        let q = coef.cols();
        Ok(Self {
            kind: MeanKind::Linear,
            center: vec![0.0; q],
            scale: vec![1.0; q],
            body: Body::Affine { intercept, coef },
        })
    }

    pub fn kind(&self) -> &MeanKind {
        &self.kind
    }

    pub fn inputs(&self) -> usize {
        self.center.len()
    }

    pub fn outputs(&self) -> usize {
        match &self.body {
            Body::Affine { intercept, .. } => intercept.len(),
            Body::Network { out_center, .. } => out_center.len(),
        }
    }

    /// `α` for affine models.
    pub fn intercept(&self) -> Option<&[f64]> {
        match &self.body {
            Body::Affine { intercept, .. } => Some(intercept),
            Body::Network { .. } => None,
        }
    }

    /// `β` (p×q) for affine models.
    pub fn coefficients(&self) -> Option<&Matrix> {
        match &self.body {
            Body::Affine { coef, .. } => Some(coef),
            Body::Network { .. } => None,
        }
    }

    /// Per-epoch training loss for networks.
    pub fn loss_history(&self) -> Option<&[f64]> {
        match &self.body {
            Body::Network { loss_history, .. } => Some(loss_history),
            Body::Affine { .. } => None,
        }
    }

    pub fn network(&self) -> Option<&Mlp> {
        match &self.body {
            Body::Network { net, .. } => Some(net),
            Body::Affine { .. } => None,
        }
    }

    /// Statistics centering and scaling recorded at fit time.
    pub fn standardization(&self) -> (&[f64], &[f64]) {
        (&self.center, &self.scale)
    }

    /// Prediction for one statistic vector in original units.
    pub fn predict_one(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        if s.len() != self.inputs() {
            return Err(Error::DimensionMismatch {
                what: "statistics",
                expected: self.inputs(),
                found: s.len(),
            });
        }
        match &self.body {
            Body::Affine { intercept, coef } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = intercept[k] + coef.row(k).iter().zip(s).map(|(b, x)| b * x).sum::<f64>();
                }
            }
            Body::Network {
                net,
                out_center,
                out_scale,
                ..
            } => {
                let z: Vec<f64> = s
                    .iter()
                    .enumerate()
                    .map(|(j, x)| (x - self.center[j]) / self.scale[j])
                    .collect();
                net.forward(&z, out);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = out_center[k] + out_scale[k] * *o;
                }
            }
        }
        Ok(())
    }

    /// Predictions for every row of `stats` (original units).
    pub fn predict(&self, stats: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(stats.rows(), self.outputs());
        for i in 0..stats.rows() {
            self.predict_one(stats.row(i), out.row_mut(i))?;
        }
        Ok(out)
    }

    /// `θ − m̂(s)` for every row.
    pub fn residuals(&self, stats: &Matrix, theta: &Matrix) -> Result<Matrix> {
        let fitted = self.predict(stats)?;
        let mut r = theta.clone();
        for (x, f) in r.as_mut_slice().iter_mut().zip(fitted.as_slice()) {
            *x -= f;
        }
        Ok(r)
    }
}

/// Fitted conditional log-variance, one model per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceModel {
    per_parameter: Vec<RegressionModel>,
}

/// Regresses `log(max(ε̂², δ))` on the statistics with weights `w`, separately
/// for every parameter.
pub fn fit_log_variance(
    stats: &Matrix,
    residuals: &Matrix,
    weights: &[f64],
    kind: &VarianceKind,
) -> Result<VarianceModel> {
    if residuals.rows() != stats.rows() {
        return Err(Error::DimensionMismatch {
            what: "residual rows",
            expected: stats.rows(),
            found: residuals.rows(),
        });
    }
    let per_parameter = (0..residuals.cols())
        .map(|k| {
            let col = residuals.column(k);
            let active = col
                .iter()
                .zip(weights)
                .any(|(e, w)| *w > 0.0 && e * e >= RESIDUAL_FLOOR);
            if !active {
                return Err(Error::DegenerateResiduals(k));
            }
            let response: Vec<f64> = col
                .iter()
                .map(|e| math::ln((e * e).max(RESIDUAL_FLOOR)))
                .collect();
            let y = Matrix::column_vector(&response);
            match kind {
                VarianceKind::Linear => fit_wls_linear(stats, &y, weights),
                VarianceKind::Mlp(cfg) => fit_mlp(stats, &y, weights, cfg),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceModel { per_parameter })
}

impl VarianceModel {
    /// Wraps one single-output log-variance model per parameter.
    pub fn from_models(per_parameter: Vec<RegressionModel>) -> Result<Self> {
        if let Some(m) = per_parameter.iter().find(|m| m.outputs() != 1) {
            return Err(Error::DimensionMismatch {
                what: "log-variance model outputs",
                expected: 1,
                found: m.outputs(),
            });
        }
        Ok(Self { per_parameter })
    }

    pub fn parameters(&self) -> usize {
        self.per_parameter.len()
    }

    pub fn models(&self) -> &[RegressionModel] {
        &self.per_parameter
    }

    /// Fitted `log σ²(s)` for every row (rows × p).
    pub fn predict_log_variance(&self, stats: &Matrix) -> Result<Matrix> {
        let p = self.per_parameter.len();
        let mut out = Matrix::zeros(stats.rows(), p);
        let mut buf = [0.0];
        for i in 0..stats.rows() {
            for (k, m) in self.per_parameter.iter().enumerate() {
                m.predict_one(stats.row(i), &mut buf)?;
                out[(i, k)] = buf[0];
            }
        }
        Ok(out)
    }

    /// `σ̂(s) = exp(½ log σ̂²(s))`.
    pub fn sigma(&self, stats: &Matrix) -> Result<Matrix> {
        Ok(self
            .predict_log_variance(stats)?
            .map(|v| math::exp(0.5 * v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_affine_is_interpolated() {
        let s: Vec<[f64; 1]> = (0..6).map(|i| [i as f64 * 0.7 - 1.0]).collect();
        let t: Vec<[f64; 1]> = s.iter().map(|r| [2.0 + 3.0 * r[0]]).collect();
        let (s, t) = (Matrix::from_rows(&s).unwrap(), Matrix::from_rows(&t).unwrap());
        let w = vec![1.0 / 6.0; 6];
        let m = fit_wls_linear(&s, &t, &w).unwrap();
        assert!((m.intercept().unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((m.coefficients().unwrap()[(0, 0)] - 3.0).abs() < 1e-12);
        let r = m.residuals(&s, &t).unwrap();
        assert!(r.as_slice().iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn too_few_rows() {
        let s = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert_eq!(
            fit_wls_linear(&s, &t, &[0.5, 0.5]),
            Err(Error::InsufficientRows { needed: 3, found: 2 })
        );
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let s: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, i as f64]).collect();
        let t: Vec<[f64; 1]> = (0..8).map(|i| [(i * i) as f64]).collect();
        let r = fit_wls_linear(
            &Matrix::from_rows(&s).unwrap(),
            &Matrix::from_rows(&t).unwrap(),
            &[0.125; 8],
        );
        assert_eq!(r, Err(Error::RankDeficient));
    }

    #[test]
    fn linear_predict_is_affine() {
        let m = RegressionModel::affine(vec![1.0], Matrix::from_rows(&[[2.0]]).unwrap()).unwrap();
        let out = m.predict(&Matrix::from_rows(&[[3.0]]).unwrap()).unwrap();
        assert_eq!(out[(0, 0)], 7.0);
        assert!(m.predict(&Matrix::from_rows(&[[3.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn constant_residual_magnitude_gives_flat_log_variance() {
        let s: Vec<[f64; 2]> = (0..20)
            .map(|i| [i as f64, ((i * 7) % 5) as f64])
            .collect();
        let e: Vec<[f64; 1]> = (0..20).map(|i| [if i % 2 == 0 { 0.3 } else { -0.3 }]).collect();
        let v = fit_log_variance(
            &Matrix::from_rows(&s).unwrap(),
            &Matrix::from_rows(&e).unwrap(),
            &[0.05; 20],
            &VarianceKind::Linear,
        )
        .unwrap();
        let m = &v.models()[0];
        assert!((m.intercept().unwrap()[0] - math::ln(0.09)).abs() < 1e-8);
        assert!(m.coefficients().unwrap().as_slice().iter().all(|b| b.abs() < 1e-8));
    }

    #[test]
    fn zero_residual_is_clamped() {
        let s: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let e: Vec<[f64; 1]> = (0..10).map(|i| [if i == 3 { 0.0 } else { 1.0 + i as f64 }]).collect();
        let v = fit_log_variance(
            &Matrix::from_rows(&s).unwrap(),
            &Matrix::from_rows(&e).unwrap(),
            &[0.1; 10],
            &VarianceKind::Linear,
        )
        .unwrap();
        let sig = v.sigma(&Matrix::from_rows(&s).unwrap()).unwrap();
        assert!(sig.as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn all_zero_residuals_are_degenerate() {
        let s: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        let r = fit_log_variance(
            &Matrix::from_rows(&s).unwrap(),
            &Matrix::zeros(10, 1),
            &[0.1; 10],
            &VarianceKind::Linear,
        );
        assert_eq!(r, Err(Error::DegenerateResiduals(0)));
    }
}

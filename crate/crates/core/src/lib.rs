//! Likelihood-free posterior inference by kernel-weighted rejection followed
//! by regression adjustment.
//!
//! The crate is `no_std` (with `alloc`). It takes a reference table of
//! simulated `(parameter, summary statistic)` pairs and an observed summary
//! vector and produces weighted posterior samples:
//!
//! 1. [`rejection`] standardizes the statistics, measures the distance of
//!    every simulation to the observation and turns distances into kernel
//!    weights.
//! 2. [`regression`] fits the conditional mean of the parameters given the
//!    statistics (linear, ridge or a one-hidden-layer network) and, for the
//!    heteroscedastic variant, the conditional log-variance.
//! 3. [`adjustment`] moves every accepted parameter to the observed statistic
//!    location, optionally inside a log/logit reparameterisation.
//! 4. [`posterior`] summarises the weighted sample (moments, credible
//!    intervals, kernel density estimates, shrinkage).
//!
//! [`toy`] holds generative models with closed-form posteriors and
//! [`validation`] the cross-validation and Monte-Carlo error studies built on
//! top of them. File formats and the command line live in the companion
//! `abc-adjust` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(missing_debug_implementations)]
#![warn(clippy::alloc_instead_of_core)]
// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adjustment;
pub mod data;
mod error;
pub mod linalg;
pub mod math;
pub mod pipeline;
pub mod posterior;
pub mod regression;
pub mod rejection;
pub mod rng;
pub mod toy;
pub mod validation;

pub use error::{Error, ErrorKind, Result};

/// Imports the types most callers need.
pub mod prelude {
    #[doc(no_inline)]
    pub use crate::adjustment::{AdjustMode, AdjustmentConfig, Transform, TransformSpec};
    #[doc(no_inline)]
    pub use crate::data::{ObservedSummaries, SampleLabel, SimulationTable, WeightedSample};
    #[doc(no_inline)]
    pub use crate::linalg::Matrix;
    #[doc(no_inline)]
    pub use crate::pipeline::{infer, Family, Inference, InferenceConfig, MethodSpec};
    #[doc(no_inline)]
    pub use crate::regression::{MeanKind, MlpConfig, RegressionModel, VarianceKind, VarianceModel};
    #[doc(no_inline)]
    pub use crate::rejection::{Bandwidth, Kernel, RejectionConfig, RejectionOutput, Standardization};
    #[doc(no_inline)]
    pub use crate::{Error, ErrorKind, Result};
}

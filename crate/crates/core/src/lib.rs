//! Bounded Gaussian-process regression.
//!
//! A zero-mean GP with a squared-exponential ARD kernel is fitted exactly, and
//! its marginal posterior at every query point is projected onto the set of
//! values allowed by pointwise lower and/or upper bound functions. The
//! projected marginal is a mixed distribution (point masses on the bounds
//! plus a truncated Gaussian body) whose CDF, quantiles, mean and variance
//! are all available in closed form.
//!
//! Hyperparameters are chosen by leave-one-out cross-validation: the
//! unbounded PRESS criterion with a closed-form variance calibration, or the
//! bound-aware PRESS computed on projected leave-one-out means, minimised
//! with CMA-ES.
//!
//! Modules:
//!
//! * [`gp`] exact GP regression, prediction, closed-form LOO predictors.
//! * [`projection`] the projected posterior and its distribution functions.
//! * [`inference`] PRESS objectives and the CMA-ES driver.
//! * [`benchmarks`] synthetic problem catalog, metrics and the replication runner.
//! * [`density`] non-negative density interpolation and Hellinger evaluation.
//!
//! With the default `parallel` feature, replications, CMA-ES generations and
//! Monte-Carlo sweeps run on the rayon pool; every such loop also has a
//! sequential path selected through [`Execution`]. Results never depend on
//! which path ran.

// `!(a < b)` comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod density;
pub mod design;
pub mod error;
pub mod gp;
pub mod inference;
pub mod linalg;
pub mod normal;
pub mod par;
pub mod projection;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
pub use gp::{FittedGP, GaussianPrediction, HyperParams, TrainingSet};
pub use inference::{InferenceConfig, InferenceMode, InferenceResult};
pub use par::Execution;
pub use projection::{BoundSpec, PointBounds, ProjectedPosterior};

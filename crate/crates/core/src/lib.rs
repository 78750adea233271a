//! Uncertainty-gated control for ankle exoskeletons.
//!
//! Small temporal-convolutional uncertainty estimators are trained on
//! in-distribution gait, a decision threshold is calibrated from training
//! scores alone, and a streaming gate switches a phase-based torque
//! controller off when incoming sensor windows look unfamiliar.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases below fix the precision used by training (`f64`) and the
//! optional single-precision inference path.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod evalkit;
pub mod gaitsim;
pub mod nets;
pub mod numcore;
pub mod outlier;
pub mod pipeline;
pub mod scalar;
pub mod training;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = numcore::Tensor2<f64>;
pub type TensorF32 = numcore::Tensor2<f32>;
pub type Net = numcore::Network<f64>;
pub type NetF32 = numcore::Network<f32>;

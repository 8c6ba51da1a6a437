//! Arbitrary-shaped text detection by pixel aggregation.
//!
//! The crate is organised by pipeline stage: [`tensor`] numerics, the
//! forward-only [`net`], the training [`loss`] stack, ground-truth
//! generation in [`gt`], post-processing in [`pa`], scoring in [`eval`],
//! synthetic scenes and the map-space trainer in [`synth`], and file IO,
//! rendering and benchmarking in [`app`].
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the production element type.

pub mod app;
pub mod error;
pub mod eval;
pub mod gt;
pub mod loss;
pub mod net;
pub mod num;
pub mod pa;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use num::Scalar;

pub type Tensor = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type PredictionMaps = net::PredictionMaps<f32>;
pub type PredictionMaps64 = net::PredictionMaps<f64>;
pub type Weights = net::Weights<f32>;
pub type Network<'w> = net::Network<'w, f32>;
pub type FeaturePyramid = net::FeaturePyramid<f32>;
pub type LossConfig = loss::LossConfig<f32>;
pub type LossConfig64 = loss::LossConfig<f64>;
pub type LossBreakdown = loss::LossBreakdown<f32>;
pub type LossBreakdown64 = loss::LossBreakdown<f64>;
pub type Polygon = gt::Polygon<f32>;
pub type TrainRun = synth::TrainRun<f32>;

//! Digital twin toolkit for electrically stimulated muscle rings: stimulus
//! synthesis, a force simulator, and from-scratch static (forest, MLP) and
//! dynamic (LSTM) force predictors.
//!
//! The learning code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod artifact;
pub mod datakit;
pub mod error;
pub mod evalkit;
pub mod forest;
pub mod mtwin;
pub mod neural;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod seq;
pub mod stimgen;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset = datakit::Dataset<f64>;
pub type WindowSet = datakit::SlidingWindowSet<f64>;
pub type Mlp = neural::Mlp<f64>;
pub type StaticNet = neural::StaticNet<f64>;
pub type Adam = optim::Adam<f64>;
pub type Forest = forest::ForestModel<f64>;
pub type Tree = forest::Tree<f64>;
pub type Lstm = seq::Lstm<f64>;

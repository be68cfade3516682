//! Dynamic discrete choice models for link-level emission levels.
//!
//! The crate covers the full estimation path: loading link observations,
//! discretizing emission rates into three levels with 1-D K-means, building
//! lagged estimation frames, fitting multinomial and ordered logit models by
//! maximum likelihood with robust covariance, and evaluating them through
//! confusion matrices, direct elasticities and the Hausman-McFadden test.
//! A seeded generator produces panels with known parameters.
//!
//! Numerical code is generic over [`Real`] (`f64` or `f32`); the aliases
//! below fix the common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod discretizer;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod level;
pub mod linalg;
pub mod mnl;
pub mod ordered_logit;
pub mod rng;
pub mod scalar;
pub mod synthgen;

pub use error::{Error, Result};
pub use level::Level;
pub use scalar::Real;

/// Version tag written into every serialized artifact.
pub const SCHEMA_VERSION: &str = "1.0";

pub type MnlParams64 = mnl::MnlParams<f64>;
pub type MnlParams32 = mnl::MnlParams<f32>;
pub type OlParams64 = ordered_logit::OlParams<f64>;
pub type OlParams32 = ordered_logit::OlParams<f32>;
pub type ModelFrame64 = ingest::ModelFrame<f64>;
pub type ModelFrame32 = ingest::ModelFrame<f32>;
pub type FittedModel64 = estimator::FittedModel<f64>;
pub type FittedModel32 = estimator::FittedModel<f32>;
pub type Clustering64 = discretizer::Clustering<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type ElasticityReport64 = diagnostics::ElasticityReport<f64>;

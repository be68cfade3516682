//! Command-line front end: configuration, artifact formats, and the
//! end-to-end pipeline.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{ConfigFile, ModelSelection, Overrides, PipelineConfig};
pub use pipeline::{run_pipeline, Metrics, PipelineOutcome, StageError};

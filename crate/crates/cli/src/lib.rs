//! Pipeline orchestration for the forecasting and valuation CLI: config
//! loading and hashing, stage execution with artifact caching, report
//! rendering, and a seeded sample dataset.

pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod sample;

pub use config::{ConfigError, Overrides, PipelineConfig};
pub use pipeline::{run_pipeline, run_stage, PipelineError, RunManifest};
pub use report::emit_report;

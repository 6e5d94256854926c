//! Pipeline driver behind the `gazeq` binary.

pub mod config;
pub mod logging;
pub mod pipeline;

pub use config::{Paths, PipelineConfig};
pub use pipeline::{run_pipeline, RunSummary, Stage, StageError};

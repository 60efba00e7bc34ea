//! The `bofscan` command-line pipeline: synthetic corpus generation, training,
//! evaluation, the method comparison, registration and prediction.

mod app;
pub mod config;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod seeds;

pub use app::{run, Cli, Command};
pub use config::PipelineConfig;
pub use error::{CliError, CliResult};

//! Configuration, pipeline stages and synthetic data for the `hrisk` binary.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod simulate;
pub mod table;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use pipeline::Pipeline;
pub use simulate::{simulate, write_simulation, SimulatedData, SimulationSettings};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "HRISK_OUT_DIR";

//! Batch driver for condensate transport optimization: configuration,
//! presets, sweeps and file outputs.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{load, Config, ExperimentKind, Sources};
pub use error::{CliError, Result};
pub use run::run;

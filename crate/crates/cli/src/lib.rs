//! Library behind the `adequacy` command: configuration, commands and
//! report formats.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{sha256_hex, system_hash, BudgetMode, ExperimentConfig, OutputConfig, RunConfig, TrainingConfig};
pub use error::{CliError, CliResult};
pub use report::{RunReport, RunResult};

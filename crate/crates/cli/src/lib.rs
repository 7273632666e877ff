//! Configuration parsing and run orchestration behind the `minkflow` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{oracle_command, run_command, RunError, RunOptions, RunReport};

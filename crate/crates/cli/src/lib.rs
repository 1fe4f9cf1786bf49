//! Configuration parsing and run orchestration for the `exdisk` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, ForcingSpec, Mode, RunConfig};

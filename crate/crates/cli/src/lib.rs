//! Batch front-end for the detector-array experiments: TOML in, CSV out.

pub mod config;
mod error;
pub mod output;
pub mod runner;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, Result};
pub use output::{to_csv_bytes, write_csv};
pub use runner::{run, Table};

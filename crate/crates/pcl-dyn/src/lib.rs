//! Configuration, file formats and commands for the `pcl-dyn` runner.
//!
//! The physics lives in `pcl-core`; this crate turns TOML configurations into
//! hierarchy propagations and writes trajectory CSVs, spectrum blocks,
//! truncation-scan tables and run manifests.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod presets;
pub mod run;
pub mod threads;

pub use config::Config;
pub use error::CliError;

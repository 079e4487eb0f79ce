//! File formats, configuration, parallel scans and the command-line driver
//! for [`discavg_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod parallel;
pub mod repro;
pub mod series_json;

pub use error::CliError;

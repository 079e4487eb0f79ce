//! Run manifests written next to output files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::output::write_file;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Every parameter after config and defaults were applied.
    pub parameters: serde_json::Value,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    /// Arguments that reproduce the run (config entries inlined).
    pub argv: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, parameters: serde_json::Value, argv: Vec<String>) -> Self {
        RunManifest {
            subcommand: subcommand.to_owned(),
            parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            argv,
        }
    }

    /// `<output>.manifest.json`
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(output);
        write_file(&path, &serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

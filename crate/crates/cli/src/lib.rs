//! Configuration loading and scenario execution behind the `oamux` binary.

pub mod config;
pub mod scenario;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use scenario::{compare_files, run_scenario, ErrorRecord, Overrides, Pipeline, RunSummary, ScenarioError};

use std::path::Path;

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(parse_config(&text)?)
}

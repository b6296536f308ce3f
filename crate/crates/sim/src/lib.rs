//! Configuration files, CSV output and the command-line jobs built on
//! `bpf-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod jobs;
pub mod output;
pub mod presets;

pub use config::{ConfigError, Model, Problem, RunConfig};
pub use jobs::{Outcome, SimError};

use std::path::Path;

/// Loads a config from a file or a preset, then applies `--set` overrides.
pub fn load(config: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> Result<RunConfig, SimError> {
    let text = match (config, preset) {
        (Some(_), Some(_)) => return Err(SimError::Usage("give either --config or --preset, not both".into())),
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| SimError::Usage(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => presets::text(name)
            .ok_or_else(|| {
                SimError::Usage(format!(
                    "unknown preset `{name}` (known: {})",
                    presets::NAMES.join(", ")
                ))
            })?
            .to_string(),
        (None, None) => return Err(SimError::Usage("one of --config or --preset is required".into())),
    };
    Ok(RunConfig::parse_with(&text, overrides)?)
}

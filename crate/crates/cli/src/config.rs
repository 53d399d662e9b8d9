//! Layered tool configuration: built-in defaults, overridden by an optional
//! JSON config file, overridden by command-line flags. The merged result is
//! echoed into every output directory so a run can be reproduced from its
//! artifacts alone.

use std::path::Path;

use compact_place_core::baselines::{Bl1Params, Bl2Params};
use compact_place_core::dataset::GeneratorConfig;
use compact_place_core::env::EnvConfig;
use compact_place_core::agent::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every tunable in one document. All sections are optional in the file;
/// missing ones fall back to the built-in defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub generator: GeneratorConfig,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub bl1: Bl1Params,
    pub bl2: Bl2Params,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            generator: GeneratorConfig::default(),
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            bl1: Bl1Params::default(),
            bl2: Bl2Params::default(),
        }
    }
}

impl AppConfig {
    /// Defaults, then the config file if given, then the global flags.
    pub fn load(file: Option<&Path>, seed: Option<u64>) -> Result<AppConfig, CliError> {
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?
            }
            None => AppConfig::default(),
        };
        if let Some(seed) = seed {
            cfg.generator.seed = seed;
            cfg.train.seed = seed;
        }
        Ok(cfg)
    }

    /// Writes the merged configuration next to the other artifacts.
    pub fn echo(&self, out_dir: &Path) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("serialize config: {e}")))?;
        crate::files::write_text(&out_dir.join("effective_config.json"), &format!("{body}\n"))
    }
}

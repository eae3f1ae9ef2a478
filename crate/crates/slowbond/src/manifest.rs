//! The replay record: every experiment directory contains a
//! `manifest.json` holding the fully resolved configuration plus the
//! per-replica seed values, so `reproduce <manifest>` can re-run the
//! experiment and byte-compare the artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::HarnessError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    /// Resolved configuration (file values with CLI overrides applied).
    pub config: ExperimentConfig,
    /// Seed of replica `i` is `config.run.seed ^ i`; listed explicitly so a
    /// single replica can be replayed without knowing the derivation rule.
    pub replica_seeds: Vec<u64>,
}

impl Manifest {
    pub fn new(config: ExperimentConfig) -> Manifest {
        let replica_seeds = (0..config.run.replicas as u64)
            .map(|i| config.run.seed ^ i)
            .collect();
        Manifest {
            schema_version: SCHEMA_VERSION,
            config,
            replica_seeds,
        }
    }
}

/// Write `dir/manifest.json`; returns the path written.
pub fn write_manifest(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest::new(config.clone());
    let path = dir.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Config(format!(
            "manifest schema_version {} is not supported (this build reads {})",
            manifest.schema_version, SCHEMA_VERSION
        )));
    }
    Ok(manifest)
}

//! Experiment harness for the damped-interface exclusion gas.
//!
//! The heavy lifting (simulator, macroscopic solver, observables,
//! weak-form diagnostics) lives in `slowbond-core`; this crate adds
//! everything that touches the outside world:
//!
//! * a versioned TOML configuration schema with CLI overrides ([`config`]),
//! * the end-to-end pipeline simulate → observe → solve → compare
//!   ([`experiment`]),
//! * file formats: CSV emitters ([`csvio`]), a compact binary snapshot
//!   store ([`snapshot`]), static SVG overlay plots ([`svg`]), and the
//!   `manifest.json` replay record ([`manifest`]),
//! * the `slowbond` command-line binary.
//!
//! Every artifact is a deterministic function of the resolved
//! configuration: re-running with the same seed reproduces all CSV and SVG
//! outputs byte for byte, which is what the `reproduce` subcommand checks.

pub mod config;
pub mod csvio;
pub mod experiment;
pub mod manifest;
pub mod snapshot;
pub mod svg;

use thiserror::Error;

/// Harness-level error: configuration problems, labelled pipeline-stage
/// failures, and I/O or (de)serialization trouble.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    /// A core-library failure tagged with the pipeline stage that hit it.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: slowbond_core::Error,
    },
    #[error(transparent)]
    Core(#[from] slowbond_core::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("snapshot file: {0}")]
    Snapshot(String),
}

/// Adapter for tagging core errors with the stage that produced them:
/// `core_call().map_err(stage("simulate"))?`.
pub fn stage(stage: &'static str) -> impl Fn(slowbond_core::Error) -> HarnessError {
    move |source| HarnessError::Stage { stage, source }
}

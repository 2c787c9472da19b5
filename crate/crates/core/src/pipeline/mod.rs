//! Config-driven stages that read and write a run directory.

mod artifacts;
mod config;
mod stages;

use std::path::Path;

pub use artifacts::{ArtifactStore, Envelope, RunManifest};
pub use config::{IngestOptions, MonitorOptions, Paths, PipelineConfig, SweepOptions, TrainOptions, WindowOptions, CONFIG_SCHEMA_VERSION};
pub use stages::{
    compare, evaluate, ingest, inject, monitor, preprocess, search, select, sweep, train_fixed, FeatureSelection, InjectSpec, ModelMeta,
    MonitorOutput, Run, DATASET, FEATURES, FRAME, METRICS_CSV, METRICS_JSON, MODEL, MODEL_META, PLAN,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("artifact {name} was produced by config {found}, current config is {expected} (use --force to accept)")]
    StaleArtifact { name: String, found: String, expected: String },
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Stage(String),
}

impl PipelineError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        PipelineError::Io(format!("{}: {e}", path.display()))
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingArtifact(_) | PipelineError::StaleArtifact { .. } => 3,
            _ => 4,
        }
    }
}

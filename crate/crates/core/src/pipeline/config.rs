use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::drift::AdaptationConfig;
use crate::eval::{CompareConfig, SplitFractions, SweepConfig};
use crate::features::SelectConfig;
use crate::ingest::{Application, NetworkMode, DEFAULT_MAX_GAP_SECONDS};
use crate::nn::Architecture;
use crate::preprocess::PreprocessPolicy;
use crate::search::{PipelineSearchConfig, SearchSpace};
use crate::synth::SynthConfig;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Directory scanned recursively for `*.csv` logs.
    pub data_dir: Option<PathBuf>,
    pub artifacts_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { data_dir: None, artifacts_dir: PathBuf::from("artifacts") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    /// JSON map from canonical field names to CSV headers.
    pub schema_map: Option<PathBuf>,
    pub resample_period_s: i64,
    pub max_gap_s: i64,
    /// Which (mode, application) partition to carry forward; the largest by default.
    pub network_mode: Option<NetworkMode>,
    pub application: Option<Application>,
    /// Generates data instead of reading `data_dir`.
    pub synthetic: Option<SynthConfig>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            schema_map: None,
            resample_period_s: 1,
            max_gap_s: DEFAULT_MAX_GAP_SECONDS,
            network_mode: None,
            application: None,
            synthetic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowOptions {
    /// Steps of the resampled series.
    pub look_back: usize,
    pub horizon: usize,
    pub fractions: SplitFractions,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions { look_back: 10, horizon: 2, fractions: SplitFractions::default() }
    }
}

/// Fixed model for the `train` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub architecture: Architecture,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub units: usize,
    pub dense_units: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub teacher_forcing: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            architecture: Architecture::EncoderDecoder,
            encoder_layers: 1,
            decoder_layers: 1,
            units: 64,
            dense_units: Vec::new(),
            dropout: 0.0,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            teacher_forcing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorOptions {
    pub check_period: i64,
    pub window_size: i64,
    pub rel_margin: f64,
    pub adaptation: AdaptationConfig,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { check_period: 600, window_size: 600, rel_margin: 0.2, adaptation: AdaptationConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Look-backs swept at `fixed_horizon`, in steps.
    pub look_backs: Vec<usize>,
    pub fixed_horizon: usize,
    /// Horizons swept at `fixed_look_back`, in steps.
    pub horizons: Vec<usize>,
    pub fixed_look_back: usize,
    pub model: SweepConfig,
}

impl Default for SweepOptions {
    /// Two to five minutes of look-back and five to twenty minutes of
    /// horizon at a 30 s step.
    fn default() -> Self {
        SweepOptions {
            look_backs: vec![4, 6, 8, 10],
            fixed_horizon: 10,
            horizons: vec![10, 14, 20, 30, 40],
            fixed_look_back: 10,
            model: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Seeds for `evaluate --compare` and the sweeps.
    pub seeds: Vec<u64>,
    pub dataset_tag: String,
    pub paths: Paths,
    pub ingest: IngestOptions,
    pub preprocess: PreprocessPolicy,
    pub features: SelectConfig,
    pub windows: WindowOptions,
    pub space: SearchSpace,
    pub search: PipelineSearchConfig,
    pub train: TrainOptions,
    pub compare: CompareConfig,
    pub monitor: MonitorOptions,
    pub sweep: SweepOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            seeds: vec![0, 1, 2],
            dataset_tag: "dataset".into(),
            paths: Paths::default(),
            ingest: IngestOptions::default(),
            preprocess: PreprocessPolicy::default(),
            features: SelectConfig::default(),
            windows: WindowOptions::default(),
            space: SearchSpace::default(),
            search: PipelineSearchConfig::default(),
            train: TrainOptions::default(),
            compare: CompareConfig::default(),
            monitor: MonitorOptions::default(),
            sweep: SweepOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks ranges and that referenced input paths exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!("schema_version {} (expected {CONFIG_SCHEMA_VERSION})", self.schema_version));
        }
        self.windows.fractions.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.sweep.model.fractions.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.windows.look_back == 0 || self.windows.horizon == 0 {
            return bad("look_back and horizon must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.features.cumulative_threshold) || !(0.0..=1.0).contains(&self.features.corr_threshold) {
            return bad("feature thresholds must lie in [0, 1]".into());
        }
        if self.ingest.resample_period_s <= 0 || self.ingest.max_gap_s < 0 {
            return bad("resample period must be positive and max_gap non-negative".into());
        }
        if self.monitor.check_period <= 0 || self.monitor.window_size <= 0 || self.monitor.rel_margin < 0.0 {
            return bad("monitor periods must be positive and rel_margin non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.train.teacher_forcing) || !(0.0..=1.0).contains(&self.search.teacher_forcing) {
            return bad("teacher forcing must lie in [0, 1]".into());
        }
        if self.search.budget == 0 {
            return bad("search budget must be at least 1".into());
        }
        self.space.param_space().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if let Some(d) = &self.paths.data_dir {
            if !d.is_dir() {
                return bad(format!("data_dir {} is not a directory", d.display()));
            }
        }
        if let Some(s) = &self.ingest.schema_map {
            if !s.is_file() {
                return bad(format!("schema_map {} not found", s.display()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON with the artifacts directory blanked,
    /// so relocating outputs keeps the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.artifacts_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{score, MetricsReport};
use super::{make_windows, EvalError, Split, SplitFractions, WindowedSet};
use crate::nn::{train, ModelSpec, NetworkWeights, TrainConfig};
use crate::preprocess::Normalizer;
use crate::search::{run_pipeline_search, PipelineSearch, PipelineSearchConfig, SearchError, SearchSpace};
use crate::Frame;

pub const BASELINE_LSTM: &str = "baseline_lstm";
pub const BASELINE_SEQ2SEQ: &str = "baseline_seq2seq";
pub const AUTOML: &str = "automl";

/// Wall time of one training job, kept apart from the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub model: String,
    pub look_back: usize,
    pub horizon: usize,
    pub seed: u64,
    pub wall_s: f64,
}

pub fn timings_csv(t: &[Timing]) -> String {
    let mut s = String::from("model,look_back,horizon,seed,wall_s\n");
    for r in t {
        s.push_str(&format!("{},{},{},{},{:.3}\n", r.model, r.look_back, r.horizon, r.seed, r.wall_s));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub baseline_units: usize,
    pub baseline_learning_rate: f64,
    pub space: SearchSpace,
    pub search: PipelineSearchConfig,
    pub epsilon_kbps: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            baseline_units: 128,
            baseline_learning_rate: 1e-3,
            space: SearchSpace::default(),
            search: PipelineSearchConfig::default(),
            epsilon_kbps: 1.0,
        }
    }
}

pub struct Comparison {
    pub report: MetricsReport,
    pub timings: Vec<Timing>,
    /// One searched model per seed, in seed order.
    pub searched: Vec<PipelineSearch>,
}

pub fn baseline_specs(data: &WindowedSet, units: usize) -> [(&'static str, ModelSpec); 2] {
    let f = data.features.len();
    [
        (BASELINE_LSTM, ModelSpec::direct(f, data.target_index, units, data.look_back, data.horizon)),
        (BASELINE_SEQ2SEQ, ModelSpec::encoder_decoder(f, data.target_index, 1, 1, units, Vec::new(), 0.0, data.look_back, data.horizon)),
    ]
}

/// Baselines and the searched model on identical splits; every model gets the
/// same final fit (train+val, early stopping on val) and is scored on test.
pub fn compare_models(data: &WindowedSet, target: &Normalizer, dataset: &str, seeds: &[u64], config: &CompareConfig) -> Result<Comparison, SearchError> {
    let fit_set = data.train_val::<f64>();
    let val_set = data.part::<f64>(Split::Val);
    let test_set = data.part::<f64>(Split::Test);
    let (l, h) = (data.look_back, data.horizon);
    let mut out = Comparison { report: MetricsReport::default(), timings: Vec::new(), searched: Vec::new() };
    for &seed in seeds {
        for (tag, spec) in baseline_specs(data, config.baseline_units) {
            let t0 = Instant::now();
            let cfg = config.search.final_train_config(config.baseline_learning_rate);
            let (w, _) = train(&spec, &fit_set, Some(&val_set), &cfg, seed)?;
            out.timings.push(Timing { model: tag.into(), look_back: l, horizon: h, seed, wall_s: t0.elapsed().as_secs_f64() });
            out.report.push(dataset, tag, l, h, score(&spec, &w, &test_set, target, config.epsilon_kbps)?, seed);
        }
        let t0 = Instant::now();
        let found = run_pipeline_search(data, &config.space, &config.search, seed)?;
        out.timings.push(Timing { model: AUTOML.into(), look_back: l, horizon: h, seed, wall_s: t0.elapsed().as_secs_f64() });
        out.report.push(dataset, AUTOML, l, h, score(&found.spec, &found.weights, &test_set, target, config.epsilon_kbps)?, seed);
        out.searched.push(found);
    }
    out.report.add_means();
    Ok(out)
}

/// Fixed encoder–decoder trained once per (look_back, horizon) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub fractions: SplitFractions,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub units: usize,
    pub dense_units: Vec<usize>,
    pub dropout: f64,
    pub train: TrainConfig,
    pub epsilon_kbps: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fractions: SplitFractions::default(),
            encoder_layers: 1,
            decoder_layers: 1,
            units: 32,
            dense_units: Vec::new(),
            dropout: 0.0,
            train: TrainConfig { learning_rate: 3e-3, max_epochs: 40, patience: 6, ..Default::default() },
            epsilon_kbps: 1.0,
        }
    }
}

pub struct SweepOutcome {
    pub report: MetricsReport,
    pub timings: Vec<Timing>,
}

/// Trains and scores one model per setting and seed. Settings are (look_back, horizon) in steps.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    frame: &Frame,
    features: &[String],
    target: &str,
    norm: &Normalizer,
    dataset: &str,
    model_tag: &str,
    settings: &[(usize, usize)],
    seeds: &[u64],
    config: &SweepConfig,
) -> Result<SweepOutcome, EvalError> {
    let mut out = SweepOutcome { report: MetricsReport::default(), timings: Vec::new() };
    for &(l, h) in settings {
        let data = make_windows(frame, features, target, l, h, config.fractions)?;
        let spec = ModelSpec::encoder_decoder(
            features.len(),
            data.target_index,
            config.encoder_layers,
            config.decoder_layers,
            config.units,
            config.dense_units.clone(),
            config.dropout,
            l,
            h,
        );
        let (tr, va, te) = (data.part::<f64>(Split::Train), data.part::<f64>(Split::Val), data.part::<f64>(Split::Test));
        for &seed in seeds {
            let t0 = Instant::now();
            let (w, _): (NetworkWeights<f64>, _) = train(&spec, &tr, Some(&va), &config.train, seed)?;
            out.timings.push(Timing { model: model_tag.into(), look_back: l, horizon: h, seed, wall_s: t0.elapsed().as_secs_f64() });
            out.report.push(dataset, model_tag, l, h, score(&spec, &w, &te, norm, config.epsilon_kbps)?, seed);
        }
    }
    out.report.add_means();
    Ok(out)
}

/// Look-back sweep at a fixed horizon.
#[allow(clippy::too_many_arguments)]
pub fn sweep_lookback(
    frame: &Frame,
    features: &[String],
    target: &str,
    norm: &Normalizer,
    dataset: &str,
    look_backs: &[usize],
    horizon: usize,
    seeds: &[u64],
    config: &SweepConfig,
) -> Result<SweepOutcome, EvalError> {
    let settings: Vec<(usize, usize)> = look_backs.iter().map(|&l| (l, horizon)).collect();
    sweep(frame, features, target, norm, dataset, "lookback_sweep", &settings, seeds, config)
}

/// Horizon sweep at a fixed look-back.
#[allow(clippy::too_many_arguments)]
pub fn sweep_horizon(
    frame: &Frame,
    features: &[String],
    target: &str,
    norm: &Normalizer,
    dataset: &str,
    look_back: usize,
    horizons: &[usize],
    seeds: &[u64],
    config: &SweepConfig,
) -> Result<SweepOutcome, EvalError> {
    let settings: Vec<(usize, usize)> = horizons.iter().map(|&h| (look_back, h)).collect();
    sweep(frame, features, target, norm, dataset, "horizon_sweep", &settings, seeds, config)
}

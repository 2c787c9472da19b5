use serde::{Deserialize, Serialize};

use super::optimize::{bayesian_search, random_search, BayesConfig, SearchTrace};
use super::{Dim, ParamSpace, SearchError};
use crate::eval::{Split, WindowedSet};
use crate::nn::{train, ModelSpec, NetworkWeights, NnError, TrainConfig, TrainTrace};

/// Architecture and optimizer box searched for the encoder–decoder family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub encoder_layers: (i64, i64),
    pub decoder_layers: (i64, i64),
    pub lstm_units: Vec<usize>,
    pub dense_layers: (i64, i64),
    pub dense_units: Vec<usize>,
    pub learning_rate: (f64, f64),
    pub dropout: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            encoder_layers: (1, 3),
            decoder_layers: (1, 3),
            lstm_units: vec![32, 64, 128, 256],
            dense_layers: (0, 2),
            dense_units: vec![16, 32, 64],
            learning_rate: (1e-4, 1e-2),
            dropout: (0.0, 0.5),
        }
    }
}

impl SearchSpace {
    pub fn param_space(&self) -> Result<ParamSpace, SearchError> {
        let choice = |v: &[usize]| Dim::Choice { values: v.iter().map(|u| *u as f64).collect() };
        if self.lstm_units.contains(&0) || self.dense_units.contains(&0) || self.encoder_layers.0 < 1 || self.decoder_layers.0 < 1 || self.dense_layers.0 < 0 {
            return Err(SearchError::InvalidSpace("layer counts and widths must be positive".into()));
        }
        if self.dropout.0 < 0.0 || self.dropout.1 > 0.9 {
            return Err(SearchError::InvalidSpace("dropout must lie in [0, 0.9]".into()));
        }
        ParamSpace::new(vec![
            ("encoder_layers", Dim::Integer { lo: self.encoder_layers.0, hi: self.encoder_layers.1 }),
            ("decoder_layers", Dim::Integer { lo: self.decoder_layers.0, hi: self.decoder_layers.1 }),
            ("lstm_units", choice(&self.lstm_units)),
            ("dense_layers", Dim::Integer { lo: self.dense_layers.0, hi: self.dense_layers.1 }),
            ("dense_units", choice(&self.dense_units)),
            ("learning_rate", Dim::LogUniform { lo: self.learning_rate.0, hi: self.learning_rate.1 }),
            ("dropout", Dim::Continuous { lo: self.dropout.0, hi: self.dropout.1 }),
        ])
    }

    /// Decoded parameters (in `param_space` order) to a spec and learning rate.
    pub fn to_spec(params: &[f64], input_dim: usize, target_feature: usize, look_back: usize, horizon: usize) -> (ModelSpec, f64) {
        let dense = vec![params[4] as usize; params[3] as usize];
        let spec = ModelSpec::encoder_decoder(
            input_dim,
            target_feature,
            params[0] as usize,
            params[1] as usize,
            params[2] as usize,
            dense,
            params[6],
            look_back,
            horizon,
        );
        (spec, params[5])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bayesian,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSearchConfig {
    pub method: Method,
    pub budget: usize,
    pub bayes: BayesConfig,
    pub candidate_epochs: usize,
    pub candidate_patience: usize,
    pub final_epochs: usize,
    pub final_patience: usize,
    pub batch_size: usize,
    pub teacher_forcing: f64,
}

impl Default for PipelineSearchConfig {
    fn default() -> Self {
        PipelineSearchConfig {
            method: Method::Bayesian,
            budget: 30,
            bayes: BayesConfig::default(),
            candidate_epochs: 15,
            candidate_patience: 5,
            final_epochs: 100,
            final_patience: 10,
            batch_size: 32,
            teacher_forcing: 1.0,
        }
    }
}

impl PipelineSearchConfig {
    /// Budget-1 Bayesian runs degrade to a single random draw.
    fn effective_method(&self) -> Method {
        if self.budget <= self.bayes.init_points {
            Method::Random
        } else {
            self.method
        }
    }

    pub fn final_train_config(&self, learning_rate: f64) -> TrainConfig {
        TrainConfig {
            learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.final_epochs,
            patience: self.final_patience,
            teacher_forcing: self.teacher_forcing,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineSearch {
    pub spec: ModelSpec,
    pub learning_rate: f64,
    pub weights: NetworkWeights<f64>,
    pub trace: SearchTrace,
    pub final_trace: TrainTrace,
}

/// Searches on the train and val splits only, then retrains the incumbent
/// on train+val with early stopping on val.
pub fn run_pipeline_search(data: &WindowedSet, space: &SearchSpace, config: &PipelineSearchConfig, seed: u64) -> Result<PipelineSearch, SearchError> {
    let params = space.param_space()?;
    let train_set = data.part::<f64>(Split::Train);
    let val_set = data.part::<f64>(Split::Val);
    if train_set.is_empty() || val_set.is_empty() {
        return Err(SearchError::InvalidConfig("search needs non-empty train and val splits".into()));
    }
    let input_dim = data.features.len();
    let objective = |p: &[f64], trial_seed: u64| -> Result<f64, SearchError> {
        let (spec, lr) = SearchSpace::to_spec(p, input_dim, data.target_index, data.look_back, data.horizon);
        let cfg = TrainConfig {
            learning_rate: lr,
            batch_size: config.batch_size,
            max_epochs: config.candidate_epochs,
            patience: config.candidate_patience,
            teacher_forcing: config.teacher_forcing,
        };
        match train(&spec, &train_set, Some(&val_set), &cfg, trial_seed) {
            Ok((_, t)) => Ok(t.best_val_mae.or(t.initial_val_mae).unwrap_or(f64::INFINITY)),
            // a diverged candidate scores as its untrained network
            Err(NnError::DivergedLoss { trace, .. }) => trace.initial_val_mae.ok_or(SearchError::NonFiniteObjective(0)),
            Err(e) => Err(e.into()),
        }
    };
    let trace = match config.effective_method() {
        Method::Random => random_search(&params, config.budget, objective, seed)?,
        Method::Bayesian => bayesian_search(&params, config.budget, objective, seed, &config.bayes)?,
    };
    let best = trace.incumbent().expect("non-empty trace");
    let (spec, learning_rate) = SearchSpace::to_spec(&best.params, input_dim, data.target_index, data.look_back, data.horizon);
    let fit_set = data.train_val::<f64>();
    let (weights, final_trace) = train(&spec, &fit_set, Some(&val_set), &config.final_train_config(learning_rate), best.seed)?;
    Ok(PipelineSearch { spec, learning_rate, weights, trace, final_trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_point_is_a_valid_spec() {
        let space = SearchSpace::default();
        let ps = space.param_space().unwrap();
        for corner in 0..(1 << 7) {
            let u: Vec<f64> = (0..7).map(|b| ((corner >> b) & 1) as f64).collect();
            let (spec, lr) = SearchSpace::to_spec(&ps.decode(&u), 3, 0, 4, 2);
            spec.validate().unwrap();
            assert!((1e-4..=1e-2 + 1e-12).contains(&lr));
        }
    }

    #[test]
    fn decode_mid_point() {
        let ps = SearchSpace::default().param_space().unwrap();
        let p = ps.decode(&[0.5; 7]);
        let (spec, _) = SearchSpace::to_spec(&p, 2, 1, 5, 3);
        assert_eq!(spec.encoder_units, vec![spec.encoder_units[0]; 2]);
        assert_eq!(spec.dense_units.len(), 1);
        assert!((spec.dropout - 0.25).abs() < 1e-12);
    }
}

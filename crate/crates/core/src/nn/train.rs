use ndarray::{s, Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::mae_loss;
use super::network::{backward, forward, Mode};
use super::spec::ModelSpec;
use super::weights::NetworkWeights;
use super::NnError;
use crate::Scalar;

/// Supervised windows: inputs (n, look_back, input_dim), targets
/// (n, horizon, output_dim).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet<T> {
    pub inputs: Array3<T>,
    pub targets: Array3<T>,
}

impl<T: Scalar> WindowSet<T> {
    pub fn new(inputs: Array3<T>, targets: Array3<T>) -> Result<Self, NnError> {
        if inputs.dim().0 != targets.dim().0 {
            return Err(NnError::ShapeMismatch("inputs and targets disagree on window count".into()));
        }
        Ok(WindowSet { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        WindowSet { inputs: self.inputs.select(Axis(0), idx), targets: self.targets.select(Axis(0), idx) }
    }

    pub fn cast<U: Scalar>(&self) -> WindowSet<U> {
        WindowSet { inputs: self.inputs.mapv(|v| U::of(v.as_f64())), targets: self.targets.mapv(|v| U::of(v.as_f64())) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub teacher_forcing: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 1e-3, batch_size: 32, max_epochs: 50, patience: 5, teacher_forcing: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mae: f64,
    pub val_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    pub initial_val_mae: Option<f64>,
    pub best_epoch: Option<usize>,
    pub best_val_mae: Option<f64>,
    pub stopped_early: bool,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mae,val_mae\n");
        for e in &self.epochs {
            let v = e.val_mae.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_mae, v));
        }
        out
    }
}

/// Dropout-free autoregressive predictions in chunks of `chunk` windows.
pub fn predict<T: Scalar>(
    spec: &ModelSpec,
    weights: &NetworkWeights<T>,
    inputs: &Array3<T>,
    chunk: usize,
) -> Result<Array3<T>, NnError> {
    let n = inputs.dim().0;
    let mut out = Array3::zeros((n, spec.horizon, spec.output_dim));
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let chunk = chunk.max(1);
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let pass = forward(spec, weights, inputs.slice(s![start..end, .., ..]), Mode::Infer, false, &mut rng)?;
        out.slice_mut(s![start..end, .., ..]).assign(&pass.predictions);
        start = end;
    }
    Ok(out)
}

/// MAE over every window and horizon step, in f64.
pub fn evaluate_mae<T: Scalar>(spec: &ModelSpec, weights: &NetworkWeights<T>, data: &WindowSet<T>) -> Result<f64, NnError> {
    if data.is_empty() {
        return Err(NnError::NoData);
    }
    let pred = predict(spec, weights, &data.inputs, 256)?;
    let total: f64 = pred.iter().zip(data.targets.iter()).map(|(p, t)| (p.as_f64() - t.as_f64()).abs()).sum();
    Ok(total / pred.len() as f64)
}

/// Mini-batch Adam on MAE from freshly initialized weights.
pub fn train<T: Scalar>(
    spec: &ModelSpec,
    train_set: &WindowSet<T>,
    val_set: Option<&WindowSet<T>>,
    config: &TrainConfig,
    seed: u64,
) -> Result<(NetworkWeights<T>, TrainTrace), NnError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = NetworkWeights::init(spec, &mut rng);
    train_from(spec, init, train_set, val_set, config, &mut rng)
}

/// Continues training `weights` (fresh optimizer state). Without a
/// validation set the final weights are returned; with one, the best.
pub fn train_from<T: Scalar>(
    spec: &ModelSpec,
    mut weights: NetworkWeights<T>,
    train_set: &WindowSet<T>,
    val_set: Option<&WindowSet<T>>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(NetworkWeights<T>, TrainTrace), NnError> {
    if train_set.is_empty() {
        return Err(NnError::NoData);
    }
    if config.batch_size == 0 {
        return Err(NnError::InvalidSpec("batch_size must be positive".into()));
    }
    let val_set = val_set.filter(|v| !v.is_empty());
    let mut trace = TrainTrace::default();
    if config.max_epochs == 0 {
        return Ok((weights, trace));
    }
    if let Some(v) = val_set {
        trace.initial_val_mae = Some(evaluate_mae(spec, &weights, v)?);
    }
    let mut adam = AdamState::new(&weights, AdamConfig { learning_rate: config.learning_rate, ..Default::default() });
    let mut best: Option<(f64, NetworkWeights<T>)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(rng);
        let mut weighted = 0.0;
        for batch_idx in order.chunks(config.batch_size) {
            let batch = train_set.subset(batch_idx);
            let mode = Mode::Train { targets: batch.targets.view(), teacher_forcing: config.teacher_forcing };
            let pass = forward(spec, &weights, batch.inputs.view(), mode, true, rng)?;
            let (loss, dpred) = mae_loss(pass.predictions.view(), batch.targets.view())?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(NnError::DivergedLoss { epoch, trace });
            }
            weighted += loss * batch_idx.len() as f64;
            let grads = backward(spec, &weights, &pass, dpred.view())?;
            match adam_step(&mut weights, &grads, &mut adam) {
                Ok(()) => {}
                Err(NnError::NonFiniteGradient) => return Err(NnError::DivergedLoss { epoch, trace }),
                Err(e) => return Err(e),
            }
            if !weights.all_finite() {
                return Err(NnError::DivergedLoss { epoch, trace });
            }
        }
        let train_mae = weighted / train_set.len() as f64;
        let val_mae = match val_set {
            Some(v) => Some(evaluate_mae(spec, &weights, v)?),
            None => None,
        };
        trace.epochs.push(EpochRecord { epoch, train_mae, val_mae });
        if let Some(v) = val_mae {
            if !v.is_finite() {
                return Err(NnError::DivergedLoss { epoch, trace });
            }
            if best.as_ref().map_or(true, |(b, _)| v < *b) {
                best = Some((v, weights.clone()));
                trace.best_epoch = Some(epoch);
                trace.best_val_mae = Some(v);
                since_best = 0;
            } else {
                since_best += 1;
                if config.patience > 0 && since_best >= config.patience {
                    trace.stopped_early = true;
                    break;
                }
            }
        }
    }
    let weights = best.map_or(weights, |(_, w)| w);
    Ok((weights, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Windows over y_t = t / n with one input feature (the target).
    fn linear_windows(n: usize, look_back: usize, horizon: usize) -> WindowSet<f64> {
        let y: Vec<f64> = (0..n).map(|t| t as f64 / n as f64).collect();
        let count = n - look_back - horizon + 1;
        let inputs = Array3::from_shape_fn((count, look_back, 1), |(w, t, _)| y[w + t]);
        let targets = Array3::from_shape_fn((count, horizon, 1), |(w, t, _)| y[w + look_back + t]);
        WindowSet::new(inputs, targets).unwrap()
    }

    fn split(ws: &WindowSet<f64>, at: usize) -> (WindowSet<f64>, WindowSet<f64>) {
        let a: Vec<usize> = (0..at).collect();
        let b: Vec<usize> = (at..ws.len()).collect();
        (ws.subset(&a), ws.subset(&b))
    }

    #[test]
    fn zero_epochs_returns_init() {
        let spec = ModelSpec::encoder_decoder(1, 0, 1, 1, 4, vec![], 0.0, 4, 2);
        let ws = linear_windows(30, 4, 2);
        let cfg = TrainConfig { max_epochs: 0, ..Default::default() };
        let (w, trace) = train(&spec, &ws, None, &cfg, 3).unwrap();
        let init = NetworkWeights::<f64>::init(&spec, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(w, init);
        assert!(trace.epochs.is_empty());
    }

    #[test]
    fn no_data() {
        let spec = ModelSpec::direct(1, 0, 2, 4, 2);
        let ws = WindowSet::new(Array3::<f64>::zeros((0, 4, 1)), Array3::zeros((0, 2, 1))).unwrap();
        assert!(matches!(train(&spec, &ws, None, &TrainConfig::default(), 0), Err(NnError::NoData)));
    }

    #[test]
    fn same_seed_same_weights() {
        let spec = ModelSpec::encoder_decoder(1, 0, 1, 1, 4, vec![3], 0.2, 4, 2);
        let ws = linear_windows(40, 4, 2);
        let cfg = TrainConfig { max_epochs: 3, batch_size: 8, teacher_forcing: 0.5, ..Default::default() };
        let (a, ta) = train(&spec, &ws, None, &cfg, 11).unwrap();
        let (b, tb) = train(&spec, &ws, None, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn linear_series_validation_improves() {
        let spec = ModelSpec::encoder_decoder(1, 0, 1, 1, 8, vec![], 0.0, 5, 3);
        let ws = linear_windows(120, 5, 3);
        let (tr, va) = split(&ws, 90);
        let cfg = TrainConfig { max_epochs: 30, batch_size: 16, learning_rate: 0.01, patience: 5, ..Default::default() };
        let (w, trace) = train(&spec, &tr, Some(&va), &cfg, 5).unwrap();
        let after = evaluate_mae(&spec, &w, &va).unwrap();
        assert!(after < trace.initial_val_mae.unwrap(), "{after} vs {:?}", trace.initial_val_mae);
        assert_eq!(Some(after), trace.best_val_mae);
    }

    #[test]
    fn csv_trace_header() {
        let t = TrainTrace {
            epochs: vec![EpochRecord { epoch: 1, train_mae: 0.5, val_mae: Some(0.25) }],
            ..Default::default()
        };
        assert_eq!(t.to_csv(), "epoch,train_mae,val_mae\n1,0.5,0.25\n");
    }
}

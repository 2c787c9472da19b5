use ndarray::{s, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ks::ks_statistic;
use super::DriftError;
use crate::frame::Frame;
use crate::nn::{predict, train_from, ModelSpec, NetworkWeights, TrainConfig, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptationConfig {
    pub fine_tune_epochs: usize,
    pub fine_tune_lr_scale: f64,
    pub batch_size: usize,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig { fine_tune_epochs: 5, fine_tune_lr_scale: 0.1, batch_size: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_time_s: i64,
    pub windowed_mae: f64,
    pub threshold: f64,
    pub drift_flag: bool,
    pub adapted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftMonitorState {
    pub baseline_mae: f64,
    pub rel_margin: f64,
    pub check_period: i64,
    pub window_size: i64,
    pub adaptation: AdaptationConfig,
    pub history: Vec<CheckRecord>,
}

impl DriftMonitorState {
    pub fn new(baseline_mae: f64) -> Self {
        DriftMonitorState {
            baseline_mae,
            rel_margin: 0.2,
            check_period: 600,
            window_size: 600,
            adaptation: AdaptationConfig::default(),
            history: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        (1.0 + self.rel_margin) * self.baseline_mae
    }
}

/// A forecast value paired with what was later observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub time_s: i64,
    pub prediction: f64,
    pub actual: f64,
}

pub fn windowed_mae(window: &[Pair]) -> Result<f64, DriftError> {
    if window.is_empty() {
        return Err(DriftError::EmptyWindow);
    }
    Ok(window.iter().map(|p| (p.prediction - p.actual).abs()).sum::<f64>() / window.len() as f64)
}

/// Compares the window's MAE to the current threshold and records the check.
pub fn check(state: &mut DriftMonitorState, check_time_s: i64, window: &[Pair]) -> Result<bool, DriftError> {
    let mae = windowed_mae(window)?;
    let threshold = state.threshold();
    let drift = mae > threshold;
    state.history.push(CheckRecord { check_time_s, windowed_mae: mae, threshold, drift_flag: drift, adapted: false });
    Ok(drift)
}

/// Model inputs over a stream: one row per sample, columns in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    /// Seconds since the first sample.
    pub times: Vec<i64>,
    pub values: Array2<f64>,
    pub segments: Vec<std::ops::Range<usize>>,
    pub target_index: usize,
}

impl Stream {
    pub fn from_frame(frame: &Frame, features: &[String], target: &str) -> Result<Self, DriftError> {
        let sel = frame.select(features).ok_or_else(|| DriftError::UnknownColumn(features.join(",")))?;
        let target_index =
            features.iter().position(|f| f == target).ok_or_else(|| DriftError::UnknownColumn(target.into()))?;
        let t0 = frame.timestamps.first().copied().unwrap_or(0);
        let values = Array2::from_shape_fn((frame.rows(), features.len()), |(r, c)| sel.columns[c][r]);
        Ok(Stream {
            times: frame.timestamps.iter().map(|t| t - t0).collect(),
            values,
            segments: frame.segments.clone(),
            target_index,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn input(&self, origin: usize, look_back: usize) -> Array2<f64> {
        self.values.slice(s![origin - look_back..origin, ..]).to_owned()
    }

    /// Stride-`horizon` forecast origins: rows where a forecast of rows
    /// [o, o + horizon) can be issued from rows [o - look_back, o).
    pub fn origins(&self, look_back: usize, horizon: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for seg in &self.segments {
            let mut o = seg.start + look_back;
            while o + horizon <= seg.end {
                out.push(o);
                o += horizon;
            }
        }
        out
    }

    /// Training windows whose targets lie in rows `rows`; inputs may reach
    /// back before the range within the same segment.
    pub fn windows_in(&self, rows: std::ops::Range<usize>, look_back: usize, horizon: usize) -> WindowSet<f64> {
        let mut origins = Vec::new();
        for seg in &self.segments {
            let lo = rows.start.max(seg.start + look_back);
            let hi = rows.end.min(seg.end);
            let mut o = lo;
            while o + horizon <= hi {
                origins.push(o);
                o += 1;
            }
        }
        let f = self.values.ncols();
        let inputs = Array3::from_shape_fn((origins.len(), look_back, f), |(w, t, c)| self.values[[origins[w] - look_back + t, c]]);
        let targets = Array3::from_shape_fn((origins.len(), horizon, 1), |(w, t, _)| self.values[[origins[w] + t, self.target_index]]);
        WindowSet { inputs, targets }
    }
}

fn forecast(spec: &ModelSpec, weights: &NetworkWeights<f64>, stream: &Stream, origins: &[usize]) -> Result<Array3<f64>, DriftError> {
    let f = stream.values.ncols();
    let mut x = Array3::zeros((origins.len(), spec.look_back, f));
    for (w, &o) in origins.iter().enumerate() {
        x.slice_mut(s![w, .., ..]).assign(&stream.input(o, spec.look_back));
    }
    Ok(predict(spec, weights, &x, 256)?)
}

fn pairs_for(stream: &Stream, origins: &[usize], pred: &Array3<f64>) -> Vec<Pair> {
    let mut out = Vec::new();
    for (w, &o) in origins.iter().enumerate() {
        for h in 0..pred.dim().1 {
            let row = o + h;
            out.push(Pair { time_s: stream.times[row], prediction: pred[[w, h, 0]], actual: stream.values[[row, stream.target_index]] });
        }
    }
    out
}

/// MAE of `weights` over the stride-horizon forecasts whose actuals fall
/// in [from_s, to_s).
pub fn replay_mae(
    spec: &ModelSpec,
    weights: &NetworkWeights<f64>,
    stream: &Stream,
    from_s: i64,
    to_s: i64,
) -> Result<f64, DriftError> {
    let origins: Vec<usize> = stream
        .origins(spec.look_back, spec.horizon)
        .into_iter()
        .filter(|&o| stream.times[o + spec.horizon - 1] >= from_s && stream.times[o] < to_s)
        .collect();
    let pred = forecast(spec, weights, stream, &origins)?;
    let pairs: Vec<Pair> = pairs_for(stream, &origins, &pred).into_iter().filter(|p| p.time_s >= from_s && p.time_s < to_s).collect();
    windowed_mae(&pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adapted {
    pub weights: NetworkWeights<f64>,
    pub baseline_mae: f64,
    pub threshold: f64,
}

/// Fine-tunes `weights` on the stream rows in [t - window, t) and
/// re-measures the windowed MAE there with the updated weights.
pub fn adapt(
    spec: &ModelSpec,
    weights: &NetworkWeights<f64>,
    stream: &Stream,
    state: &mut DriftMonitorState,
    check_time_s: i64,
    trained_lr: f64,
    seed: u64,
) -> Result<Adapted, DriftError> {
    let from = check_time_s - state.window_size;
    let lo = stream.times.partition_point(|&t| t < from);
    let hi = stream.times.partition_point(|&t| t < check_time_s);
    let data = stream.windows_in(lo..hi, spec.look_back, spec.horizon);
    if data.is_empty() {
        return Err(DriftError::InsufficientWindow);
    }
    let cfg = TrainConfig {
        learning_rate: trained_lr * state.adaptation.fine_tune_lr_scale,
        batch_size: state.adaptation.batch_size,
        max_epochs: state.adaptation.fine_tune_epochs,
        patience: 0,
        teacher_forcing: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (weights, _) = train_from(spec, weights.clone(), &data, None, &cfg, &mut rng)?;
    let baseline_mae = replay_mae(spec, &weights, stream, from, check_time_s)?;
    state.baseline_mae = baseline_mae;
    Ok(Adapted { weights, baseline_mae, threshold: state.threshold() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub flags: usize,
    pub detection_times: Vec<i64>,
    /// Baseline in force after each state change, starting with the initial one.
    pub baselines: Vec<f64>,
    /// Advisory distribution check: KS distance of each window's actuals
    /// from the first window's.
    pub ks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub history: Vec<CheckRecord>,
    pub summary: MonitorSummary,
}

impl MonitorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_time_s,windowed_mae,threshold,drift_flag,adapted\n");
        for r in &self.history {
            out.push_str(&format!("{},{},{},{},{}\n", r.check_time_s, r.windowed_mae, r.threshold, r.drift_flag, r.adapted));
        }
        out
    }
}

/// Replays `stream`, issuing a forecast every `horizon` samples, checking
/// every `check_period` seconds and adapting on drift. Forecasts issued at
/// or after an adaptation use the updated weights.
pub fn run_monitor(
    spec: &ModelSpec,
    mut weights: NetworkWeights<f64>,
    stream: &Stream,
    state: &mut DriftMonitorState,
    trained_lr: f64,
    seed: u64,
) -> Result<(MonitorReport, NetworkWeights<f64>), DriftError> {
    if state.check_period <= 0 || state.window_size <= 0 {
        return Err(DriftError::Config("check_period and window_size must be positive".into()));
    }
    let origins = stream.origins(spec.look_back, spec.horizon);
    // the last sample stands for one sampling interval
    let step = stream.times.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0).min().unwrap_or(1);
    let end = stream.times.last().map_or(0, |t| t + step);
    let mut pairs: Vec<Pair> = Vec::new();
    let mut baselines = vec![state.baseline_mae];
    let mut detection_times = Vec::new();
    let mut ks = Vec::new();
    let mut reference: Option<Vec<f64>> = None;
    let mut next_origin = 0;
    let mut k = 1;
    while k * state.check_period <= end {
        let t = k * state.check_period;
        // issue every forecast whose origin time is before t
        let batch_end = next_origin + origins[next_origin..].partition_point(|&o| stream.times[o] < t);
        if batch_end > next_origin {
            let batch = &origins[next_origin..batch_end];
            let pred = forecast(spec, &weights, stream, batch)?;
            pairs.extend(pairs_for(stream, batch, &pred));
            next_origin = batch_end;
        }
        let window: Vec<Pair> = pairs.iter().copied().filter(|p| p.time_s >= t - state.window_size && p.time_s < t).collect();
        if window.is_empty() {
            k += 1;
            continue;
        }
        let actuals: Vec<f64> = window.iter().map(|p| p.actual).collect();
        let reference = reference.get_or_insert_with(|| actuals.clone());
        ks.push(ks_statistic(reference, &actuals)?);
        if check(state, t, &window)? {
            detection_times.push(t);
            let adapted = adapt(spec, &weights, stream, state, t, trained_lr, seed.wrapping_add(k as u64))?;
            weights = adapted.weights;
            baselines.push(adapted.baseline_mae);
            state.history.last_mut().expect("check pushed").adapted = true;
        }
        k += 1;
    }
    let summary = MonitorSummary { flags: detection_times.len(), detection_times, baselines, ks };
    Ok((MonitorReport { history: state.history.clone(), summary }, weights))
}

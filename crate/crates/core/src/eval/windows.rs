use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::frame::Frame;
use crate::nn::WindowSet;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.70, val: 0.15, test: 0.15 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<(), EvalError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(EvalError::BadSplit(format!("{} / {} / {}", self.train, self.val, self.test)));
        }
        Ok(())
    }
}

/// Sliding stride-1 windows over a frame, tagged by chronological split.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSet {
    /// (windows, look_back, features)
    pub inputs: Array3<f64>,
    /// (windows, horizon, 1)
    pub targets: Array3<f64>,
    /// Frame row of each window's first input step.
    pub starts: Vec<usize>,
    pub splits: Vec<Split>,
    pub features: Vec<String>,
    pub target: String,
    pub target_index: usize,
    pub look_back: usize,
    pub horizon: usize,
    /// Windows dropped at split boundaries so that no two splits share a
    /// target row.
    pub purged: usize,
}

impl WindowedSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn part<T: Scalar>(&self, split: Split) -> WindowSet<T> {
        self.subset(&self.indices(split))
    }

    pub fn subset<T: Scalar>(&self, idx: &[usize]) -> WindowSet<T> {
        WindowSet {
            inputs: self.inputs.select(ndarray::Axis(0), idx).mapv(T::of),
            targets: self.targets.select(ndarray::Axis(0), idx).mapv(T::of),
        }
    }

    /// Train and val windows together, in order.
    pub fn train_val<T: Scalar>(&self) -> WindowSet<T> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.splits[i] != Split::Test).collect();
        self.subset(&idx)
    }
}

/// Number of stride-1 windows in a contiguous run of `n` rows.
pub fn window_count(n: usize, look_back: usize, horizon: usize) -> usize {
    (n + 1).saturating_sub(look_back + horizon)
}

/// Builds windows over `features` (which must include `target`) with
/// chronological splitting on window start rows. Windows never cross a
/// segment boundary.
pub fn make_windows(
    frame: &Frame,
    features: &[String],
    target: &str,
    look_back: usize,
    horizon: usize,
    fractions: SplitFractions,
) -> Result<WindowedSet, EvalError> {
    fractions.validate()?;
    if look_back == 0 || horizon == 0 {
        return Err(EvalError::BadSplit("look_back and horizon must be positive".into()));
    }
    let cols: Vec<&[f64]> = features
        .iter()
        .map(|f| frame.column(f).ok_or_else(|| EvalError::UnknownColumn(f.clone())))
        .collect::<Result<_, _>>()?;
    let target_index = features.iter().position(|f| f == target).ok_or_else(|| EvalError::UnknownColumn(target.into()))?;
    let y = cols[target_index];

    let mut starts = Vec::new();
    for seg in &frame.segments {
        let n = seg.len();
        for k in 0..window_count(n, look_back, horizon) {
            starts.push(seg.start + k);
        }
    }
    if starts.is_empty() {
        let longest = frame.segments.iter().map(|s| s.len()).max().unwrap_or(0);
        return Err(EvalError::SeriesTooShort { rows: longest, needed: look_back + horizon });
    }

    let total = starts.len();
    let n_train = (fractions.train * total as f64).round() as usize;
    let n_val = ((fractions.val * total as f64).round() as usize).min(total - n_train);
    let mut tags: Vec<Split> = (0..total)
        .map(|i| if i < n_train { Split::Train } else if i < n_train + n_val { Split::Val } else { Split::Test })
        .collect();

    // a later-split window may not predict a row already predicted earlier
    let mut keep = Vec::with_capacity(total);
    let mut prev_end: Option<usize> = None;
    let mut cur_end: Option<usize> = None;
    for i in 0..total {
        if i > 0 && tags[i] != tags[i - 1] {
            prev_end = cur_end;
        }
        let ok = prev_end.map_or(true, |e| starts[i] + look_back >= e);
        if ok {
            cur_end = Some(starts[i] + look_back + horizon);
        }
        keep.push(ok);
    }
    let purged = keep.iter().filter(|k| !**k).count();
    let kept: Vec<usize> = (0..total).filter(|&i| keep[i]).collect();
    let starts: Vec<usize> = kept.iter().map(|&i| starts[i]).collect();
    tags = kept.iter().map(|&i| tags[i]).collect();

    let f = features.len();
    let inputs = Array3::from_shape_fn((starts.len(), look_back, f), |(w, t, c)| cols[c][starts[w] + t]);
    let targets = Array3::from_shape_fn((starts.len(), horizon, 1), |(w, t, _)| y[starts[w] + look_back + t]);
    Ok(WindowedSet {
        inputs,
        targets,
        starts,
        splits: tags,
        features: features.to_vec(),
        target: target.to_string(),
        target_index,
        look_back,
        horizon,
        purged,
    })
}

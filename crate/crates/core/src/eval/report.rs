use serde::{Deserialize, Serialize};

use super::{mae, mape, EvalError};
use crate::nn::{predict, ModelSpec, NetworkWeights, WindowSet};
use crate::preprocess::Normalizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: String,
    pub model: String,
    pub look_back: usize,
    pub horizon: usize,
    pub mae_norm: f64,
    pub mae_kbps: f64,
    pub mape_percent: f64,
    pub excluded: usize,
    /// `None` marks a seed-mean row.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

/// Scores computed from one model on one window set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub mae_norm: f64,
    pub mae_kbps: f64,
    pub mape_percent: f64,
    pub excluded: usize,
}

/// Test scores on both scales. MAPE uses denormalized values with `epsilon_kbps`.
pub fn score(spec: &ModelSpec, weights: &NetworkWeights<f64>, data: &WindowSet<f64>, target: &Normalizer, epsilon_kbps: f64) -> Result<Scores, EvalError> {
    if data.is_empty() {
        return Err(EvalError::Empty);
    }
    let pred = predict(spec, weights, &data.inputs, 256)?;
    let p: Vec<f64> = pred.iter().copied().collect();
    let a: Vec<f64> = data.targets.iter().copied().collect();
    let pk: Vec<f64> = p.iter().map(|v| target.invert(*v)).collect();
    let ak: Vec<f64> = a.iter().map(|v| target.invert(*v)).collect();
    let m = mape(&pk, &ak, epsilon_kbps)?;
    Ok(Scores { mae_norm: mae(&p, &a)?, mae_kbps: mae(&pk, &ak)?, mape_percent: m.percent, excluded: m.excluded })
}

impl MetricsReport {
    pub fn push(&mut self, dataset: &str, model: &str, look_back: usize, horizon: usize, s: Scores, seed: u64) {
        self.rows.push(MetricsRow {
            dataset: dataset.into(),
            model: model.into(),
            look_back,
            horizon,
            mae_norm: s.mae_norm,
            mae_kbps: s.mae_kbps,
            mape_percent: s.mape_percent,
            excluded: s.excluded,
            seed: Some(seed),
        });
    }

    /// Appends one mean row per (dataset, model, look_back, horizon) group, in first-seen order.
    pub fn add_means(&mut self) {
        let per_seed: Vec<MetricsRow> = self.rows.iter().filter(|r| r.seed.is_some()).cloned().collect();
        let mut keys: Vec<(String, String, usize, usize)> = Vec::new();
        for r in &per_seed {
            let k = (r.dataset.clone(), r.model.clone(), r.look_back, r.horizon);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        for (d, m, l, h) in keys {
            let g: Vec<&MetricsRow> = per_seed.iter().filter(|r| r.dataset == d && r.model == m && r.look_back == l && r.horizon == h).collect();
            let n = g.len() as f64;
            let avg = |f: fn(&MetricsRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            self.rows.push(MetricsRow {
                dataset: d,
                model: m,
                look_back: l,
                horizon: h,
                mae_norm: avg(|r| r.mae_norm),
                mae_kbps: avg(|r| r.mae_kbps),
                mape_percent: avg(|r| r.mape_percent),
                excluded: (g.iter().map(|r| r.excluded).sum::<usize>() as f64 / n).round() as usize,
                seed: None,
            });
        }
    }

    pub fn means(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(|r| r.seed.is_none())
    }

    pub fn mean_of(&self, model: &str, look_back: usize, horizon: usize) -> Option<&MetricsRow> {
        self.means().find(|r| r.model == model && r.look_back == look_back && r.horizon == horizon)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,model,look_back,horizon,mae_norm,mae_kbps,mape_percent,excluded,seed\n");
        for r in &self.rows {
            let seed = r.seed.map_or("mean".to_string(), |v| v.to_string());
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.dataset, r.model, r.look_back, r.horizon, r.mae_norm, r.mae_kbps, r.mape_percent, r.excluded, seed
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Whitespace-separated seed-mean series for plotting: `x mae_norm mae_kbps`
    /// where x is minutes of look-back or horizon given `step_s` seconds per step.
    pub fn gnuplot(&self, by_horizon: bool, step_s: f64) -> String {
        let mut s = format!("# {} mae_norm mae_kbps\n", if by_horizon { "horizon_min" } else { "look_back_min" });
        for r in self.means() {
            let steps = if by_horizon { r.horizon } else { r.look_back };
            s.push_str(&format!("{} {} {}\n", steps as f64 * step_s / 60.0, r.mae_norm, r.mae_kbps));
        }
        s
    }

    /// Model-name bar data: `model mae_norm mape_percent`.
    pub fn gnuplot_models(&self) -> String {
        let mut s = String::from("# model mae_norm mape_percent\n");
        for r in self.means() {
            s.push_str(&format!("\"{}\" {} {}\n", r.model, r.mae_norm, r.mape_percent));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(m: f64) -> Scores {
        Scores { mae_norm: m, mae_kbps: 10.0 * m, mape_percent: m * 100.0, excluded: 1 }
    }

    #[test]
    fn means_are_arithmetic() {
        let mut r = MetricsReport::default();
        r.push("d", "a", 4, 2, s(0.1), 0);
        r.push("d", "a", 4, 2, s(0.3), 1);
        r.push("d", "b", 4, 2, s(0.2), 0);
        r.add_means();
        assert_eq!(r.rows.len(), 5);
        let a = r.mean_of("a", 4, 2).unwrap();
        assert!((a.mae_norm - 0.2).abs() < 1e-15);
        assert!((a.mae_kbps - 2.0).abs() < 1e-12);
        assert!(r.to_csv().lines().nth(4).unwrap().ends_with(",mean"));
    }

    #[test]
    fn kbps_scale_matches_minmax_range() {
        use crate::nn::{ModelSpec, NetworkWeights};
        use ndarray::Array3;
        let spec = ModelSpec::direct(1, 0, 2, 3, 2);
        let mut w = NetworkWeights::<f64>::zeros(&spec);
        w.dense[0].b.fill(0.5);
        let inputs = Array3::from_elem((4, 3, 1), 0.2);
        let targets = Array3::from_shape_fn((4, 2, 1), |(i, j, _)| 0.1 * (i + j) as f64);
        let data = WindowSet::new(inputs, targets).unwrap();
        let norm = Normalizer::MinMax { lo: 100.0, hi: 900.0, clip: false };
        let sc = score(&spec, &w, &data, &norm, 1.0).unwrap();
        assert!((sc.mae_kbps - sc.mae_norm * 800.0).abs() < 1e-9);
    }
}

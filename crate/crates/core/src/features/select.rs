use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::corr::{pearson_r, spearman_rho};
use super::gbt::{fit_gbt_importance, GbtConfig};
use super::FeatureError;
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectConfig {
    pub gbt: GbtConfig,
    pub cumulative_threshold: f64,
    pub corr_threshold: f64,
    #[serde(default)]
    pub correlation: Correlation,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            gbt: GbtConfig::default(),
            cumulative_threshold: 0.95,
            corr_threshold: 0.95,
            correlation: Correlation::Pearson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redundant {
    pub dropped: String,
    pub kept_partner: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub target: String,
    pub importance: BTreeMap<String, f64>,
    pub cumulative_threshold: f64,
    pub kept_after_importance: Vec<String>,
    pub corr_threshold: f64,
    pub dropped_redundant: Vec<Redundant>,
    pub final_features: Vec<String>,
    pub warnings: Vec<String>,
}

impl FeatureReport {
    /// Importance table sorted by score, for terminal output.
    pub fn ranked_table(&self) -> String {
        let mut rows: Vec<(&String, &f64)> = self.importance.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
        let mut out = String::from("rank  importance  feature\n");
        for (i, (name, score)) in rows.iter().enumerate() {
            let mark = if self.final_features.contains(name) { "*" } else { " " };
            out.push_str(&format!("{:>4}  {:>10.6}  {}{}\n", i + 1, score, name, mark));
        }
        out
    }
}

/// Features ranked by score (descending, ties by name), truncated to the
/// shortest prefix whose mass reaches `threshold`. Zero-score features are
/// never kept.
pub fn select_by_cumulative(importance: &BTreeMap<String, f64>, threshold: f64) -> Vec<String> {
    let mut ranked: Vec<(&String, f64)> = importance.iter().map(|(k, v)| (k, *v)).filter(|(_, v)| *v > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for (name, score) in ranked {
        kept.push(name.clone());
        mass += score;
        // tolerate rounding in normalized scores
        if mass >= threshold - 1e-12 {
            break;
        }
    }
    kept
}

/// Drops the lower-ranked member of every pair with |r| >= threshold.
/// `kept` must be ordered most important first; a constant column is never
/// considered redundant.
pub fn prune_redundant(
    kept: &[String],
    frame: &Frame,
    threshold: f64,
    correlation: Correlation,
) -> Result<(Vec<String>, Vec<Redundant>), FeatureError> {
    let mut survivors: Vec<String> = Vec::new();
    let mut dropped = Vec::new();
    for name in kept {
        let col = frame.column(name).ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
        let mut partner = None;
        for s in &survivors {
            let other = frame.column(s).expect("survivor came from frame");
            let r = match correlation {
                Correlation::Pearson => pearson_r(other, col),
                Correlation::Spearman => spearman_rho(other, col),
            };
            match r {
                Ok(r) if r.abs() >= threshold => {
                    partner = Some((s.clone(), r));
                    break;
                }
                Ok(_) | Err(FeatureError::ConstantSeries) => {}
                Err(e) => return Err(e),
            }
        }
        match partner {
            Some((p, r)) => dropped.push(Redundant { dropped: name.clone(), kept_partner: p, r }),
            None => survivors.push(name.clone()),
        }
    }
    Ok((survivors, dropped))
}

/// Full selection pass over every frame column except `target`.
pub fn select_features(frame: &Frame, target: &str, config: &SelectConfig) -> Result<FeatureReport, FeatureError> {
    if !(config.cumulative_threshold > 0.0 && config.cumulative_threshold <= 1.0) {
        return Err(FeatureError::BadThreshold(config.cumulative_threshold));
    }
    if !(config.corr_threshold > 0.0 && config.corr_threshold <= 1.0) {
        return Err(FeatureError::BadThreshold(config.corr_threshold));
    }
    let y = frame.column(target).ok_or_else(|| FeatureError::UnknownFeature(target.to_string()))?;
    let mut names: Vec<String> = frame.names.iter().filter(|n| n.as_str() != target).cloned().collect();
    names.sort();
    let cols: Vec<&[f64]> = names.iter().map(|n| frame.column(n).expect("name from frame")).collect();
    let imp = fit_gbt_importance(&cols, y, &config.gbt)?;

    let mut warnings = Vec::new();
    if imp.constant_target {
        warnings.push("target is constant: every importance is zero".to_string());
    }
    let importance: BTreeMap<String, f64> = names.iter().cloned().zip(imp.scores.iter().copied()).collect();
    let kept = select_by_cumulative(&importance, config.cumulative_threshold);
    if kept.is_empty() {
        warnings.push("no feature carries importance".to_string());
    }
    let (final_features, dropped_redundant) = prune_redundant(&kept, frame, config.corr_threshold, config.correlation)?;
    Ok(FeatureReport {
        target: target.to_string(),
        importance,
        cumulative_threshold: config.cumulative_threshold,
        kept_after_importance: kept,
        corr_threshold: config.corr_threshold,
        dropped_redundant,
        final_features,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(k, s)| (k.to_string(), *s)).collect()
    }

    fn frame(cols: &[(&str, Vec<f64>)]) -> Frame {
        let n = cols[0].1.len();
        Frame {
            timestamps: (0..n as i64).collect(),
            segments: vec![0..n],
            names: cols.iter().map(|c| c.0.to_string()).collect(),
            columns: cols.iter().map(|c| c.1.clone()).collect(),
        }
    }

    #[test]
    fn cumulative_prefix() {
        let s = scores(&[("a", 0.6), ("b", 0.3), ("c", 0.1)]);
        assert_eq!(select_by_cumulative(&s, 0.9), vec!["a", "b"]);
        assert_eq!(select_by_cumulative(&s, 1.0), vec!["a", "b", "c"]);
    }

    #[test]
    fn full_mass_skips_zero_scores() {
        let s = scores(&[("a", 0.5), ("b", 0.5), ("z", 0.0)]);
        assert_eq!(select_by_cumulative(&s, 1.0), vec!["a", "b"]);
    }

    #[test]
    fn all_zero_scores_empty() {
        assert!(select_by_cumulative(&scores(&[("a", 0.0), ("b", 0.0)]), 0.5).is_empty());
    }

    #[test]
    fn ties_broken_by_name() {
        let s = scores(&[("b", 0.5), ("a", 0.5)]);
        assert_eq!(select_by_cumulative(&s, 0.5), vec!["a"]);
    }

    #[test]
    fn identical_columns_drop_lower_ranked() {
        let x = vec![1.0, 3.0, 2.0, 5.0];
        let f = frame(&[("hi", x.clone()), ("lo", x)]);
        let (keep, dropped) = prune_redundant(&["hi".into(), "lo".into()], &f, 0.95, Correlation::Pearson).unwrap();
        assert_eq!(keep, vec!["hi"]);
        assert_eq!(dropped[0].dropped, "lo");
        assert_eq!(dropped[0].kept_partner, "hi");
        assert!((dropped[0].r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_columns_kept() {
        let f = frame(&[("a", vec![1.0, -1.0, 1.0, -1.0]), ("b", vec![1.0, 1.0, -1.0, -1.0])]);
        let (keep, dropped) = prune_redundant(&["a".into(), "b".into()], &f, 0.5, Correlation::Pearson).unwrap();
        assert_eq!(keep.len(), 2);
        assert!(dropped.is_empty());
    }

    #[test]
    fn below_threshold_pair_kept() {
        // y = x + t*z with z centred and orthogonal to x gives r = 1/sqrt(1 + t^2)
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let z = [1.0, -2.0, 0.0, 2.0, -1.0];
        let t = (1.0 / 0.81 - 1.0f64).sqrt();
        let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + t * b).collect();
        let r = pearson_r(&x, &y).unwrap();
        assert!((r - 0.9).abs() < 1e-12);
        let f = frame(&[("x", x), ("y", y)]);
        let (keep, _) = prune_redundant(&["x".into(), "y".into()], &f, 0.95, Correlation::Pearson).unwrap();
        assert_eq!(keep.len(), 2);
    }

    #[test]
    fn pruning_is_idempotent() {
        let a = vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 0.01 * (v * 7.0).sin()).collect();
        let c = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let f = frame(&[("a", a), ("b", b), ("c", c)]);
        let order: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let (once, _) = prune_redundant(&order, &f, 0.95, Correlation::Pearson).unwrap();
        let (twice, dropped) = prune_redundant(&once, &f, 0.95, Correlation::Pearson).unwrap();
        assert_eq!(once, twice);
        assert!(dropped.is_empty());
    }
}

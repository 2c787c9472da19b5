use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Label,
    OneHot,
    Target,
}

/// Label used for a missing categorical cell.
pub const MISSING_CATEGORY: &str = "<missing>";

/// A fitted categorical encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    /// Codes are indices into `categories` (first-appearance order). Unseen
    /// labels get code `categories.len()`.
    Label { categories: Vec<String> },
    /// One indicator per category; unseen labels map to all zeros.
    OneHot { categories: Vec<String> },
    /// Per-category target mean; unseen labels take the global mean.
    Target { means: BTreeMap<String, f64>, fallback: f64 },
}

fn first_appearance(labels: &[String]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    labels.iter().filter(|l| seen.insert(l.as_str())).cloned().collect()
}

impl Encoder {
    pub fn fit_label(labels: &[String]) -> Encoder {
        Encoder::Label { categories: first_appearance(labels) }
    }

    pub fn fit_one_hot(labels: &[String]) -> Encoder {
        Encoder::OneHot { categories: first_appearance(labels) }
    }

    /// Rows with a missing target do not contribute to the means.
    pub fn fit_target(labels: &[String], target: &[Option<f64>]) -> Encoder {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let (mut total, mut count) = (0.0, 0usize);
        for (l, t) in labels.iter().zip(target) {
            if let Some(t) = t {
                let e = acc.entry(l.clone()).or_insert((0.0, 0));
                e.0 += t;
                e.1 += 1;
                total += t;
                count += 1;
            }
        }
        let fallback = if count > 0 { total / count as f64 } else { 0.0 };
        let mut means: BTreeMap<String, f64> = acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
        for l in labels {
            means.entry(l.clone()).or_insert(fallback);
        }
        Encoder::Target { means, fallback }
    }

    /// Output column names for a source column.
    pub fn output_names(&self, source: &str) -> Vec<String> {
        match self {
            Encoder::OneHot { categories } => categories.iter().map(|c| format!("{source}={c}")).collect(),
            _ => vec![source.to_string()],
        }
    }

    /// Encodes a column; result is one vector per output column.
    pub fn encode(&self, labels: &[String]) -> Vec<Vec<f64>> {
        match self {
            Encoder::Label { categories } => {
                let index: BTreeMap<&str, usize> = categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
                vec![labels
                    .iter()
                    .map(|l| *index.get(l.as_str()).unwrap_or(&categories.len()) as f64)
                    .collect()]
            }
            Encoder::OneHot { categories } => categories
                .iter()
                .map(|c| labels.iter().map(|l| if l == c { 1.0 } else { 0.0 }).collect())
                .collect(),
            Encoder::Target { means, fallback } => {
                vec![labels.iter().map(|l| *means.get(l).unwrap_or(fallback)).collect()]
            }
        }
    }
}

/// Monday 1970-01-05 00:00:00 UTC.
const FIRST_MONDAY: i64 = 4 * 86_400;
const WEEK: i64 = 7 * 86_400;
const DAY: i64 = 86_400;

/// Cyclical time features: (sin, cos) of the hour-of-day angle followed by
/// (sin, cos) of the day-of-week angle, both measured from midnight UTC
/// (Monday midnight for the weekly cycle).
pub fn encode_timestamp(t: i64) -> [f64; 4] {
    let day_angle = TAU * t.rem_euclid(DAY) as f64 / DAY as f64;
    let week_angle = TAU * (t - FIRST_MONDAY).rem_euclid(WEEK) as f64 / WEEK as f64;
    [day_angle.sin(), day_angle.cos(), week_angle.sin(), week_angle.cos()]
}

pub const TIMESTAMP_FEATURES: [&str; 4] = ["hour_sin", "hour_cos", "weekday_sin", "weekday_cos"];

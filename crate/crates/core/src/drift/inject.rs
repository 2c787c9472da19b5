use serde::{Deserialize, Serialize};

use super::ks::ks_statistic;
use super::DriftError;
use crate::ingest::SessionDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftTransform {
    Scale(f64),
    /// Additive kbps offset; results are clamped at zero.
    Offset(f64),
}

impl DriftTransform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            DriftTransform::Scale(s) => v * s,
            DriftTransform::Offset(o) => (v + o).max(0.0),
        }
    }
}

/// Seconds after the first record; `length_s` of `None` runs to the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSegment {
    pub start_s: i64,
    pub length_s: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionManifest {
    pub column: String,
    pub segment: DriftSegment,
    pub transform: DriftTransform,
    pub first_timestamp: i64,
    pub last_timestamp: i64,
    pub rows_affected: usize,
    /// KS distance between the segment's target values before and after.
    pub ks_segment: f64,
    pub mean_before: f64,
    pub mean_after: f64,
}

/// Applies `transform` to dl_bitrate on the rows whose timestamp falls in
/// the segment. Every other value is left untouched.
pub fn inject_drift(
    ds: &SessionDataset,
    segment: DriftSegment,
    transform: DriftTransform,
) -> Result<(SessionDataset, InjectionManifest), DriftError> {
    let (Some(first), Some(last)) = (ds.records.first(), ds.records.last()) else {
        return Err(DriftError::SegmentOutOfBounds("empty dataset".into()));
    };
    let t0 = first.timestamp;
    let span = last.timestamp - t0 + 1;
    let length = segment.length_s.unwrap_or(span - segment.start_s);
    if segment.start_s < 0 || length <= 0 || segment.start_s + length > span {
        return Err(DriftError::SegmentOutOfBounds(format!(
            "[{}, {}) s outside a {span} s dataset",
            segment.start_s,
            segment.start_s + length
        )));
    }
    let (lo, hi) = (t0 + segment.start_s, t0 + segment.start_s + length);
    let mut out = ds.clone();
    let mut before = Vec::new();
    let mut after = Vec::new();
    for r in out.records.iter_mut().filter(|r| r.timestamp >= lo && r.timestamp < hi) {
        if let Some(v) = r.dl_bitrate {
            let w = transform.apply(v);
            before.push(v);
            after.push(w);
            r.dl_bitrate = Some(w);
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let ks_segment = if before.is_empty() { 0.0 } else { ks_statistic(&before, &after)? };
    let manifest = InjectionManifest {
        column: "dl_bitrate".into(),
        segment: DriftSegment { start_s: segment.start_s, length_s: Some(length) },
        transform,
        first_timestamp: lo,
        last_timestamp: hi - 1,
        rows_affected: before.len(),
        ks_segment,
        mean_before: mean(&before),
        mean_after: mean(&after),
    };
    Ok((out, manifest))
}

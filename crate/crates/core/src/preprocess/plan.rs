use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encode::{encode_timestamp, Encoder, Encoding, MISSING_CATEGORY, TIMESTAMP_FEATURES};
use super::impute::{FittedImpute, ImputeMethod};
use super::normalize::{NormKind, Normalizer};
use super::PreprocessError;
use crate::frame::Frame;
use crate::ingest::{write_canonical_csv, Field, FieldKind, SessionDataset, TelemetryRecord};

pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPolicy {
    #[serde(default)]
    pub encoding: Option<Encoding>,
    pub impute: ImputeMethod,
    pub normalize: NormKind,
}

/// Which transform family to fit for each column. Columns not listed are
/// dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessPolicy {
    pub target: String,
    pub columns: BTreeMap<String, ColumnPolicy>,
    /// Emit the four cyclical time features.
    pub timestamp: bool,
    /// Clip min-max outputs to [0, 1] outside the fitted range.
    pub clip_minmax: bool,
}

impl Default for PreprocessPolicy {
    /// Case-study pipeline: cyclical timestamps, label-encoded identifiers,
    /// one-hot mode and state, forward-filled radio metrics, zero-filled
    /// bitrates, min-max everywhere.
    fn default() -> Self {
        use Field::*;
        let mut columns = BTreeMap::new();
        let cat = |encoding| ColumnPolicy {
            encoding: Some(encoding),
            impute: ImputeMethod::Zero,
            normalize: NormKind::MinMax,
        };
        let num = |impute| ColumnPolicy {
            encoding: None,
            impute,
            normalize: NormKind::MinMax,
        };
        for f in [OperatorName, NodeHex, LacHex, CellId, CellIdHex, CellIdRaw] {
            columns.insert(f.name().to_string(), cat(Encoding::Label));
        }
        for f in [NetworkMode, State] {
            columns.insert(f.name().to_string(), cat(Encoding::OneHot));
        }
        for f in [DlBitrate, UlBitrate] {
            columns.insert(f.name().to_string(), num(ImputeMethod::Zero));
        }
        for f in [
            Longitude, Latitude, Speed, PingAvg, PingMin, PingMax, PingStd, PingLoss, Cqi, Snr, Rssi, Rsrp, Rsrq,
            NrxRsrp, NrxRsrq,
        ] {
            columns.insert(f.name().to_string(), num(ImputeMethod::ForwardFill));
        }
        PreprocessPolicy {
            target: DlBitrate.name().to_string(),
            columns,
            timestamp: true,
            clip_minmax: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputColumn {
    pub name: String,
    pub normalizer: Normalizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub source: Field,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Encoder>,
    pub impute: FittedImpute,
    pub outputs: Vec<OutputColumn>,
}

/// Fitted, reversible preprocessing state for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPlan {
    pub version: u32,
    pub target: String,
    pub timestamp: bool,
    pub columns: Vec<ColumnPlan>,
    /// SHA-256 of the canonical CSV of the rows the plan was fitted on.
    pub fitted_on: String,
    /// Columns whose normalizer degenerated, and similar notes.
    pub warnings: Vec<String>,
}

fn labels(records: &[TelemetryRecord], field: Field) -> Vec<String> {
    records
        .iter()
        .map(|r| r.categorical(field).unwrap_or_else(|| MISSING_CATEGORY.to_string()))
        .collect()
}

fn numbers(records: &[TelemetryRecord], field: Field) -> Vec<Option<f64>> {
    records.iter().map(|r| r.numeric(field)).collect()
}

pub fn fingerprint(records: &[TelemetryRecord]) -> String {
    let mut buf = Vec::new();
    write_canonical_csv(records, &mut buf).expect("in-memory csv write");
    hex::encode(Sha256::digest(&buf))
}

impl PreprocessPlan {
    /// Fits every transform on `records`, which should be the training split
    /// only.
    pub fn fit(records: &[TelemetryRecord], policy: &PreprocessPolicy) -> Result<PreprocessPlan, PreprocessError> {
        let target_field =
            Field::from_name(&policy.target).ok_or_else(|| PreprocessError::UnknownColumn(policy.target.clone()))?;
        let target = numbers(records, target_field);
        let mut columns = Vec::new();
        let mut warnings = Vec::new();

        for (name, cp) in &policy.columns {
            let field = Field::from_name(name).ok_or_else(|| PreprocessError::UnknownColumn(name.clone()))?;
            let (encoder, impute, raw) = match field.kind() {
                FieldKind::Timestamp => return Err(PreprocessError::UnknownColumn(name.clone())),
                FieldKind::Categorical => {
                    let l = labels(records, field);
                    let enc = match cp.encoding.unwrap_or(Encoding::Label) {
                        Encoding::Label => Encoder::fit_label(&l),
                        Encoding::OneHot => Encoder::fit_one_hot(&l),
                        Encoding::Target => {
                            if target.iter().all(Option::is_none) {
                                return Err(PreprocessError::TargetEncodingWithoutTarget(name.clone()));
                            }
                            Encoder::fit_target(&l, &target)
                        }
                    };
                    let encoded = enc.encode(&l);
                    (Some(enc), FittedImpute::Zero, encoded)
                }
                FieldKind::Numeric => {
                    let col = numbers(records, field);
                    let imp = FittedImpute::fit(&col, cp.impute)
                        .map_err(|_| PreprocessError::AllMissingColumn(name.clone()))?;
                    let filled = imp.apply(&col);
                    (None, imp, vec![filled])
                }
            };
            let names = match &encoder {
                Some(e) => e.output_names(name),
                None => vec![name.clone()],
            };
            let outputs = names
                .into_iter()
                .zip(&raw)
                .map(|(n, values)| {
                    let normalizer = Normalizer::fit(values, cp.normalize, policy.clip_minmax);
                    if normalizer.is_degenerate() {
                        warnings.push(format!("{n}: constant on fitted data, mapped to 0"));
                    }
                    OutputColumn { name: n, normalizer }
                })
                .collect();
            columns.push(ColumnPlan { source: field, encoder, impute, outputs });
        }
        if !columns.iter().any(|c| c.source == target_field) {
            return Err(PreprocessError::UnknownColumn(policy.target.clone()));
        }

        Ok(PreprocessPlan {
            version: PLAN_VERSION,
            target: policy.target.clone(),
            timestamp: policy.timestamp,
            columns,
            fitted_on: fingerprint(records),
            warnings,
        })
    }

    /// Applies the frozen transforms. Fill-based imputation runs per segment.
    pub fn apply(&self, ds: &SessionDataset) -> Frame {
        let records = &ds.records;
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();

        if self.timestamp {
            let enc: Vec<[f64; 4]> = records.iter().map(|r| encode_timestamp(r.timestamp)).collect();
            for (k, n) in TIMESTAMP_FEATURES.iter().enumerate() {
                names.push(n.to_string());
                cols.push(enc.iter().map(|e| e[k]).collect());
            }
        }
        for plan in &self.columns {
            let raw = match &plan.encoder {
                Some(enc) => enc.encode(&labels(records, plan.source)),
                None => {
                    let col = numbers(records, plan.source);
                    let mut filled = Vec::with_capacity(col.len());
                    for seg in segments_or_whole(ds) {
                        filled.extend(plan.impute.apply(&col[seg]));
                    }
                    vec![filled]
                }
            };
            for (out, values) in plan.outputs.iter().zip(raw) {
                names.push(out.name.clone());
                cols.push(values.iter().map(|&v| out.normalizer.apply(v)).collect());
            }
        }
        Frame {
            timestamps: records.iter().map(|r| r.timestamp).collect(),
            segments: ds.segments.clone(),
            names,
            columns: cols,
        }
    }

    pub fn output(&self, name: &str) -> Option<&OutputColumn> {
        self.columns.iter().flat_map(|c| c.outputs.iter()).find(|o| o.name == name)
    }

    pub fn target_normalizer(&self) -> Normalizer {
        self.output(&self.target).map(|o| o.normalizer).unwrap_or(Normalizer::Identity)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PreprocessError> {
        let plan: PreprocessPlan = serde_json::from_str(text).map_err(|e| PreprocessError::Format(e.to_string()))?;
        if plan.version != PLAN_VERSION {
            return Err(PreprocessError::Format(format!("unsupported plan version {}", plan.version)));
        }
        Ok(plan)
    }
}

fn segments_or_whole(ds: &SessionDataset) -> Vec<std::ops::Range<usize>> {
    if ds.segments.is_empty() {
        vec![0..ds.records.len()]
    } else {
        ds.segments.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Application, DownloadState, Mobility, NetworkMode};

    fn dataset() -> SessionDataset {
        let mut recs = Vec::new();
        for i in 0..20 {
            let mut r = TelemetryRecord::new(
                1_576_000_000 + i,
                if i % 3 == 0 { NetworkMode::Lte } else { NetworkMode::Nr },
                if i % 4 == 0 { DownloadState::Idle } else { DownloadState::Downloading },
                (i * 100) as f64,
            );
            r.rsrp = if i % 5 == 2 { None } else { Some(-100.0 + i as f64) };
            r.cell_id = Some(format!("c{}", i / 7));
            recs.push(r);
        }
        SessionDataset::from_records(recs, NetworkMode::Nr, Application::Downloading, Mobility::Static)
    }

    #[test]
    fn default_plan_produces_complete_frame() {
        let ds = dataset();
        let plan = PreprocessPlan::fit(&ds.records, &PreprocessPolicy::default()).unwrap();
        let frame = plan.apply(&ds);
        assert_eq!(frame.rows(), 20);
        assert!(frame.index_of("state=D").is_some());
        assert!(frame.index_of("network_mode=5G").is_some());
        assert!(frame.index_of("hour_sin").is_some());
        for c in &frame.columns {
            assert!(c.iter().all(|v| v.is_finite()));
        }
        let y = frame.column("dl_bitrate").unwrap();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[19], 1.0);
        // ping columns absent from the data are flagged, not silently dropped
        assert!(plan.warnings.iter().any(|w| w.starts_with("ping_avg")));
    }

    #[test]
    fn apply_is_pure() {
        let ds = dataset();
        let plan = PreprocessPlan::fit(&ds.records, &PreprocessPolicy::default()).unwrap();
        let before = plan.clone();
        assert_eq!(plan.apply(&ds), plan.apply(&ds));
        assert_eq!(plan, before);
    }

    #[test]
    fn unknown_column_rejected() {
        let mut policy = PreprocessPolicy::default();
        policy.columns.insert(
            "bogus".into(),
            ColumnPolicy { encoding: None, impute: ImputeMethod::Zero, normalize: NormKind::None },
        );
        let err = PreprocessPlan::fit(&dataset().records, &policy).unwrap_err();
        assert!(matches!(err, PreprocessError::UnknownColumn(c) if c == "bogus"));
    }

    #[test]
    fn target_encoding_needs_target_values() {
        let mut ds = dataset();
        for r in &mut ds.records {
            r.dl_bitrate = None;
        }
        let mut policy = PreprocessPolicy::default();
        policy.columns.get_mut("cell_id").unwrap().encoding = Some(Encoding::Target);
        let err = PreprocessPlan::fit(&ds.records, &policy).unwrap_err();
        assert!(matches!(err, PreprocessError::TargetEncodingWithoutTarget(_)));
    }

    #[test]
    fn json_round_trip() {
        let ds = dataset();
        let plan = PreprocessPlan::fit(&ds.records, &PreprocessPolicy::default()).unwrap();
        let back = PreprocessPlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn target_inverse_recovers_kbps() {
        let ds = dataset();
        let plan = PreprocessPlan::fit(&ds.records, &PreprocessPolicy::default()).unwrap();
        let frame = plan.apply(&ds);
        let n = plan.target_normalizer();
        for (norm, rec) in frame.column("dl_bitrate").unwrap().iter().zip(&ds.records) {
            assert!((n.invert(*norm) - rec.dl_bitrate.unwrap()).abs() < 1e-9);
        }
    }
}

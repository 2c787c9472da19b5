use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use super::weights::NetworkWeights;
use super::NnError;
use crate::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialized model. Weights are one blob of little-endian f64 in
/// [`NetworkWeights::params`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub spec: ModelSpec,
    /// Input feature names in column order.
    pub features: Vec<String>,
    pub target: String,
    pub plan_fingerprint: String,
    pub parameter_count: usize,
    /// Hash of the pipeline config that produced the file; empty outside a pipeline run.
    #[serde(default)]
    pub config_hash: String,
    pub weights: String,
}

impl ModelFile {
    pub fn new<T: Scalar>(
        spec: &ModelSpec,
        weights: &NetworkWeights<T>,
        features: Vec<String>,
        target: String,
        plan_fingerprint: String,
    ) -> Self {
        let mut bytes = Vec::with_capacity(weights.len() * 8);
        for v in weights.params() {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            spec: spec.clone(),
            features,
            target,
            plan_fingerprint,
            parameter_count: weights.len(),
            config_hash: String::new(),
            weights: STANDARD.encode(bytes),
        }
    }

    pub fn weights<T: Scalar>(&self) -> Result<NetworkWeights<T>, NnError> {
        self.spec.validate()?;
        let bytes = STANDARD.decode(&self.weights).map_err(|e| NnError::Format(e.to_string()))?;
        if bytes.len() % 8 != 0 {
            return Err(NnError::Format("weight blob length not a multiple of 8".into()));
        }
        let values: Vec<T> = bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect();
        let mut w = NetworkWeights::zeros(&self.spec);
        w.set_from(&values)?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NnError> {
        let m: ModelFile = serde_json::from_str(s).map_err(|e| NnError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(NnError::Format(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }
}

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// JSON artifact body tagged with the config hash that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config_hash: String,
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config_schema_version: u32,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_s: f64,
}

/// Files of one run directory. Reads check the embedded config hash
/// unless `force` is set.
#[derive(Debug, Clone)]
pub struct ArtifactStore {
    pub root: PathBuf,
    pub config_hash: String,
    pub force: bool,
}

const CSV_TAG: &str = "# config_hash: ";

impl ArtifactStore {
    pub fn new(root: impl Into<PathBuf>, config_hash: String, force: bool) -> Result<Self, PipelineError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| PipelineError::io(&root, e))?;
        Ok(ArtifactStore { root, config_hash, force })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    fn read_text(&self, name: &str) -> Result<String, PipelineError> {
        let p = self.path(name);
        if !p.is_file() {
            return Err(PipelineError::MissingArtifact(p.display().to_string()));
        }
        std::fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))
    }

    fn check_hash(&self, name: &str, found: &str) -> Result<(), PipelineError> {
        if !self.force && found != self.config_hash {
            return Err(PipelineError::StaleArtifact { name: name.into(), found: found.into(), expected: self.config_hash.clone() });
        }
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), PipelineError> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| PipelineError::io(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), PipelineError> {
        let env = Envelope { config_hash: self.config_hash.clone(), body };
        self.write_text(name, &(serde_json::to_string_pretty(&env).expect("artifact serializes") + "\n"))
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, PipelineError> {
        let text = self.read_text(name)?;
        let env: Envelope<T> = serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{name}: {e}")))?;
        self.check_hash(name, &env.config_hash)?;
        Ok(env.body)
    }

    /// CSV with a leading `# config_hash: ...` comment line.
    pub fn write_csv(&self, name: &str, csv: &str) -> Result<(), PipelineError> {
        self.write_text(name, &format!("{CSV_TAG}{}\n{csv}", self.config_hash))
    }

    /// CSV body without its hash line.
    pub fn read_csv(&self, name: &str) -> Result<String, PipelineError> {
        let text = self.read_text(name)?;
        let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
        let found = first.strip_prefix(CSV_TAG).ok_or_else(|| PipelineError::Format(format!("{name}: missing config hash line")))?;
        self.check_hash(name, found.trim())?;
        Ok(rest.to_string())
    }

    /// Model files carry the hash in their own field.
    pub fn read_model(&self, name: &str) -> Result<crate::nn::ModelFile, PipelineError> {
        let text = self.read_text(name)?;
        let m = crate::nn::ModelFile::from_json(&text).map_err(|e| PipelineError::Format(format!("{name}: {e}")))?;
        self.check_hash(name, &m.config_hash)?;
        Ok(m)
    }

    pub fn write_model(&self, name: &str, model: &crate::nn::ModelFile) -> Result<(), PipelineError> {
        let mut m = model.clone();
        m.config_hash = self.config_hash.clone();
        self.write_text(name, &(m.to_json() + "\n"))
    }

    pub fn write_manifest(&self, m: &RunManifest) -> Result<(), PipelineError> {
        self.write_text(&format!("manifest_{}.json", m.command), &(serde_json::to_string_pretty(m).expect("manifest serializes") + "\n"))
    }
}

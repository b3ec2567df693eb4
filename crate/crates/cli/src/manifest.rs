//! Run manifest: which stages ran, with content hashes of inputs and
//! artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    /// Artifact file name (relative to the output directory) to SHA-256.
    pub artifacts: BTreeMap<String, String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Option<PathBuf>,
    /// Input role (`config`, `prices`, `riskfree`, `factors`) to digest.
    pub inputs: BTreeMap<String, FileDigest>,
    pub seed: u64,
    pub out: PathBuf,
    /// Completed stages by name.
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(stage: &'static str, path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(stage, path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes through a temporary sibling and renames, so an interrupted write
/// never clobbers the previous version.
pub fn write_atomic(stage: &'static str, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(stage, &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(stage, path, e))
}

impl RunManifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    /// Loads the manifest, failing with a message that names the stage to
    /// run first.
    pub fn load(stage: &'static str, out: &Path) -> Result<Self, CliError> {
        let path = Self::path(out);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::data(
                    stage,
                    format!("no manifest in {}; run ingest first", out.display()),
                ))
            }
            Err(e) => return Err(CliError::io(stage, path, e)),
        };
        serde_json::from_str(&text).map_err(|e| CliError::data(stage, format!("corrupt manifest: {e}")))
    }

    pub fn save(&self, stage: &'static str, out: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        write_atomic(stage, &Self::path(out), &json)
    }

    /// Recomputes every input hash; any difference aborts the run.
    pub fn verify_inputs(&self, stage: &'static str) -> Result<(), CliError> {
        for (role, digest) in &self.inputs {
            let now = sha256_file(stage, &digest.path)?;
            if now != digest.sha256 {
                return Err(CliError::data(
                    stage,
                    format!(
                        "{role} input {} changed since ingest (hash mismatch); rerun ingest",
                        digest.path.display()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn require(&self, stage: &'static str, needed: &str) -> Result<&StageRecord, CliError> {
        self.stages
            .get(needed)
            .ok_or_else(|| CliError::data(stage, format!("missing {needed} artifacts; run {needed} first")))
    }

    /// Reads an artifact recorded by stage `producer`, checking its hash.
    pub fn read_artifact<T: DeserializeOwned>(
        &self,
        stage: &'static str,
        out: &Path,
        producer: &str,
        name: &str,
    ) -> Result<T, CliError> {
        let record = self.require(stage, producer)?;
        let expected = record
            .artifacts
            .get(name)
            .ok_or_else(|| CliError::data(stage, format!("{producer} did not record {name}; run {producer} first")))?;
        let path = out.join(name);
        let bytes = fs::read(&path).map_err(|e| CliError::io(stage, &path, e))?;
        if &sha256_hex(&bytes) != expected {
            return Err(CliError::data(
                stage,
                format!("{} was modified after {producer} wrote it (hash mismatch); rerun {producer}", path.display()),
            ));
        }
        serde_json::from_slice(&bytes).map_err(|e| CliError::data(stage, format!("{}: {e}", path.display())))
    }

    /// Serializes and writes an artifact, returning its file name and hash.
    pub fn write_artifact<T: Serialize>(
        stage: &'static str,
        out: &Path,
        name: &str,
        value: &T,
    ) -> Result<(String, String), CliError> {
        let mut json = serde_json::to_vec_pretty(value).map_err(|e| CliError::numerical(stage, e))?;
        json.push(b'\n');
        write_atomic(stage, &out.join(name), &json)?;
        Ok((name.to_string(), sha256_hex(&json)))
    }

    /// Records a completed stage. Later stages are dropped: their
    /// artifacts were built from what this stage just replaced.
    pub fn complete(&mut self, stage: &str, order: &[&str], record: StageRecord) {
        if let Some(pos) = order.iter().position(|s| *s == stage) {
            for later in &order[pos + 1..] {
                self.stages.remove(*later);
            }
        }
        self.stages.insert(stage.to_string(), record);
    }
}

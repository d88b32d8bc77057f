use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub metric: String,
    pub base: f64,
    pub best: f64,
    pub delta: f64,
}

/// Provenance of one `run`. Everything except `wall_clock_seconds` is a
/// function of the flags and the input bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub status: String,
    pub error: Option<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub data: InputRecord,
    pub schema: InputRecord,
    /// Output file names, relative to the manifest's directory.
    pub outputs: BTreeMap<String, String>,
    pub scores: Option<Scores>,
    pub epochs_run: usize,
    pub evaluations: usize,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let err = |message: String| CliError::Manifest {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

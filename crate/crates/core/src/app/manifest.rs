use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// File name of the manifest written next to a run's outputs.
pub const MANIFEST_FILE: &str = "pankit-run.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

/// Record of one command invocation: effective configuration, inputs,
/// outputs and per-stage wall-clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub skipped: Vec<Skipped>,
    pub stages_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(RunManifest {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            skipped: Vec::new(),
            stages_ms: BTreeMap::new(),
        })
    }

    pub fn input(&mut self, path: impl AsRef<Path>) {
        self.inputs.push(path.as_ref().display().to_string());
    }

    pub fn output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    pub fn skip(&mut self, path: impl AsRef<Path>, reason: impl ToString) {
        self.skipped.push(Skipped { path: path.as_ref().display().to_string(), reason: reason.to_string() });
    }

    /// Adds `elapsed` to the named stage.
    pub fn stage(&mut self, name: &str, elapsed: Duration) {
        *self.stages_ms.entry(name.into()).or_default() += elapsed.as_secs_f64() * 1e3;
    }

    /// Writes the manifest as `dir/pankit-run.json` and returns its path.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        super::io::write_json(&path, self)?;
        Ok(path)
    }
}

/// A JSON artifact body tagged with the manifest that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub manifest: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Artifact<T> {
    pub fn new(body: T) -> Self {
        Artifact { manifest: MANIFEST_FILE.into(), body }
    }
}

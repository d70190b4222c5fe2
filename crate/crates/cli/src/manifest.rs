//! Run manifests and the output directory bookkeeping behind them.

use anyhow::{bail, Context, Result};
use drift_recover::forward::SolverStats;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

/// The command line that produced a run, in a form `replay` can re-execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    GenerateData {
        inverse_crime: bool,
    },
    Invert {
        data: PathBuf,
        max_iters: Option<usize>,
        tol: Option<f64>,
    },
    Mms,
    Experiment {
        name: String,
        seeds: Vec<u64>,
        inverse_crime: bool,
        noise_only: bool,
        max_iters: Option<usize>,
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    /// Full configuration with defaults filled in and absolute file paths.
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub rng: String,
    pub seeds: Vec<u64>,
    pub solver: SolverStats,
    /// Paths relative to the output directory, in creation order.
    pub outputs: Vec<String>,
    /// Free-form per-command summary (stop reasons, orders, ...).
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

/// Output directory that remembers every file written through it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for `rel`, creating parent directories. The file is
    /// recorded in the inventory.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(rel.to_string());
        Ok(path)
    }

    pub fn record(&mut self, rels: impl IntoIterator<Item = String>) {
        self.written.extend(rels);
    }

    /// Write the manifest last, via rename, after checking the inventory.
    pub fn finish(self, mut manifest: Manifest) -> Result<()> {
        for rel in &self.written {
            if !self.root.join(rel).is_file() {
                bail!("listed output {rel} was not written");
            }
        }
        manifest.outputs = self.written;
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.root.join(MANIFEST))?;
        Ok(())
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

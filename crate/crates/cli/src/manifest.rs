//! Hash-chained run manifest and the per-stage artifact context.
//!
//! Every stage records the SHA-256 of each file it read and wrote, the chain
//! hash of each upstream stage it consumed, and a config snapshot. A stage's
//! own chain hash covers all of that, so a rerun upstream is visible as a
//! stale chain downstream.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::usage;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub upstream: BTreeMap<String, String>,
    pub config: BTreeMap<String, String>,
    pub wall_time_s: f64,
    pub chain: String,
}

impl StageEntry {
    fn chain_hash(&self) -> String {
        let body = serde_json::to_vec(&(&self.inputs, &self.outputs, &self.upstream, &self.config))
            .expect("manifest entry serializes");
        sha256(&body)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageEntry>,
}

impl Manifest {
    pub fn load(artifacts: &Path) -> Result<Self> {
        let path = artifacts.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| usage(format!("corrupt {}: {e}", path.display())))
    }

    fn save(&self, artifacts: &Path) -> Result<()> {
        std::fs::create_dir_all(artifacts)?;
        std::fs::write(artifacts.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Artifact I/O for one stage run.
pub struct StageRun<'a> {
    pub name: &'static str,
    pub config: &'a Config,
    manifest: Manifest,
    entry: StageEntry,
    started: Instant,
}

impl<'a> StageRun<'a> {
    /// Start `name`, clearing the directories it owns.
    pub fn begin(name: &'static str, config: &'a Config, owned_dirs: &[&str]) -> Result<Self> {
        let manifest = Manifest::load(&config.artifacts)?;
        for d in owned_dirs {
            let dir = config.artifacts.join(d);
            if dir.exists() {
                std::fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
            }
        }
        Ok(StageRun {
            name,
            config,
            manifest,
            entry: StageEntry { config: config.snapshot(), ..Default::default() },
            started: Instant::now(),
        })
    }

    /// Check that `stage` has run, that its outputs are untouched, and that
    /// it is current with respect to its own upstream stages.
    pub fn require(&mut self, stage: &str) -> Result<()> {
        let Some(entry) = self.manifest.stages.get(stage) else {
            return Err(usage(format!("stage `{stage}` has not been run; run `latent-cause {stage}` first")));
        };
        for (rel, hash) in &entry.outputs {
            let bytes = std::fs::read(self.config.artifacts.join(rel)).map_err(|_| {
                usage(format!("artifact `{rel}` is missing; rerun `latent-cause {stage}`"))
            })?;
            if sha256(&bytes) != *hash {
                return Err(usage(format!(
                    "artifact `{rel}` does not match the manifest hash; rerun `latent-cause {stage}`"
                )));
            }
        }
        for (up, chain) in &entry.upstream {
            let current = self.manifest.stages.get(up).map(|e| e.chain.as_str());
            if current != Some(chain.as_str()) {
                return Err(usage(format!(
                    "stage `{stage}` is stale relative to `{up}`; rerun `latent-cause {stage}`"
                )));
            }
        }
        self.entry.upstream.insert(stage.to_string(), entry.chain.clone());
        Ok(())
    }

    fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.artifacts)
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .unwrap_or_else(|_| path.display().to_string())
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.config.artifacts.join(rel)
    }

    /// Read a file (artifact or external input) and record its hash.
    pub fn read_path(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        self.entry.inputs.insert(self.rel(path), sha256(&bytes));
        Ok(bytes)
    }

    pub fn read(&mut self, rel: &str) -> Result<Vec<u8>> {
        let path = self.path(rel);
        self.read_path(&path)
    }

    pub fn read_string(&mut self, rel: &str) -> Result<String> {
        String::from_utf8(self.read(rel)?).with_context(|| format!("{rel} is not UTF-8"))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&mut self, rel: &str) -> Result<T> {
        let text = self.read_string(rel)?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{rel}: {e}")))
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.entry.outputs.insert(rel.to_string(), sha256(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(rel, text.as_bytes())
    }

    pub fn finish(mut self) -> Result<()> {
        self.entry.wall_time_s = self.started.elapsed().as_secs_f64();
        self.entry.chain = self.entry.chain_hash();
        self.manifest.stages.insert(self.name.to_string(), self.entry);
        self.manifest.save(&self.config.artifacts)
    }
}

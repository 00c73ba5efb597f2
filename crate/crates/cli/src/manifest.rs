//! Run manifests: every subcommand writes one next to its outputs so a run
//! can be reproduced and its artifacts verified by checksum.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    subcommand: String,
    parameters: BTreeMap<String, String>,
    wall_time_seconds: f64,
    outputs: Vec<OutputEntry>,
}

pub struct ManifestBuilder {
    subcommand: String,
    parameters: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str) -> ManifestBuilder {
        ManifestBuilder {
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let outputs = self
            .outputs
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p)?;
                Ok(OutputEntry {
                    path: p.display().to_string(),
                    sha256: hex(&Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: "seqstat",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.clone(),
            parameters: self.parameters.clone(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        std::fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

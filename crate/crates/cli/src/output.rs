//! Output directory bookkeeping and the `run.json` manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use psart_core::io::{encode_pgm16, Grid};

pub const MANIFEST: &str = "run.json";

pub struct Run {
    dir: PathBuf,
    command: String,
    config: Value,
    report: Map<String, Value>,
    artifacts: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    report: &'a Map<String, Value>,
    /// File name to SHA-256 of its contents.
    artifacts: &'a BTreeMap<String, String>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, config: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("out: cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            report: Map::new(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("out: cannot write {}", path.display()))?;
        self.artifacts.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_grid(&mut self, name: &str, grid: &Grid) -> Result<()> {
        self.write(name, grid.to_csv().as_bytes())
    }

    pub fn write_pgm(&mut self, name: &str, grid: &Grid, window: (f64, f64)) -> Result<()> {
        self.write(name, &encode_pgm16(grid, window.0, window.1))
    }

    pub fn report(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.report.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.config,
            report: &self.report,
            artifacts: &self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("out: cannot write {}", path.display()))
    }
}

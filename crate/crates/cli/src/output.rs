//! Run directories, CSV rendering and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ConfigMap;
use crate::error::CliError;

/// Reals use 17 significant digits in scientific notation; missing values are empty.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// First 16 hex digits of SHA-256 over `subcommand` and the config echo.
pub fn config_hash(subcommand: &str, config: &ConfigMap) -> String {
    let mut hasher = Sha256::new();
    hasher.update(subcommand.as_bytes());
    hasher.update(b"\n");
    hasher.update(config.echo().as_bytes());
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    config: std::collections::BTreeMap<&'a str, &'a str>,
    config_hash: &'a str,
    base_seed: Option<u64>,
    artifacts: &'a [String],
    wall_clock_seconds: f64,
    threads: usize,
    versions: Versions,
}

#[derive(Serialize)]
struct Versions {
    bandit_lan: &'static str,
    bandit_lan_cli: &'static str,
}

/// An output directory `<root>/<subcommand>-<hash>` collecting artifacts.
pub struct RunDir {
    path: PathBuf,
    subcommand: String,
    hash: String,
    artifacts: Vec<String>,
    started: Instant,
}

impl RunDir {
    pub fn create(root: &Path, subcommand: &str, config: &ConfigMap) -> Result<Self, CliError> {
        let hash = config_hash(subcommand, config);
        let path = root.join(format!("{subcommand}-{hash}"));
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(RunDir { path, subcommand: subcommand.to_string(), hash, artifacts: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    /// Writes a CSV file from pre-rendered string fields.
    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let file = self.path.join(name);
        let err = |e: csv::Error| CliError::Internal(format!("{}: {e}", file.display()));
        let mut w = csv::Writer::from_path(&file).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::io(&file, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Registers a file written by other means (relative to the run directory).
    pub fn register(&mut self, name: String) {
        self.artifacts.push(name);
    }

    /// Writes `manifest.json` via a temporary file and a rename, so it only
    /// appears once every artifact is complete.
    pub fn finish(self, config: &ConfigMap, threads: usize) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            subcommand: &self.subcommand,
            config: config.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
            config_hash: &self.hash,
            base_seed: config.get("study.base_seed").and_then(|s| s.parse().ok()),
            artifacts: &self.artifacts,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            threads,
            versions: Versions { bandit_lan: bandit_lan::VERSION, bandit_lan_cli: env!("CARGO_PKG_VERSION") },
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        let tmp = self.path.join("manifest.json.tmp");
        let dest = self.path.join("manifest.json");
        fs::write(&tmp, json).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
        Ok(self.path)
    }
}

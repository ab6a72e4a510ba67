use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};

/// Environment variable naming the cache directory; caching is off when unset.
pub const CACHE_ENV: &str = "RABI_TRIANGLE_CACHE";

/// CSV table with string cells; numbers use the shortest round-trip form,
/// switching to exponent notation for very small or large magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct PayloadRef {
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointStatus {
    pub index: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tr: Option<usize>,
}

/// Metadata written next to every CSV payload.
#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub payload: Vec<PayloadRef>,
    pub points: Vec<PointStatus>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl ResultEnvelope {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.hash(),
            config: config.clone(),
            wall_time_s: 0.0,
            payload: Vec::new(),
            points: Vec::new(),
            extra: serde_json::Value::Null,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    /// Writes the tables, the envelope as `<command>.json` and the resolved
    /// config as `<command>.config.toml`.
    pub fn write(&mut self, dir: &Path, tables: &[(&str, &Table)]) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.payload.clear();
        for (name, t) in tables {
            t.write(&dir.join(name))?;
            self.payload.push(PayloadRef { file: name.to_string(), rows: t.rows.len() });
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(dir.join(format!("{}.json", self.command)), json + "\n")?;
        fs::write(dir.join(format!("{}.config.toml", self.command)), self.config.to_toml())?;
        Ok(())
    }
}

/// Per-point result cache keyed by config hash and grid index.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    fn path(&self, hash: &str, command: &str, index: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(hash).join(format!("{command}-{index}.json")))
    }

    pub fn get_or_compute<T, F>(&self, hash: &str, command: &str, index: usize, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(path) = self.path(hash, command, index) else {
            return compute();
        };
        if let Ok(bytes) = fs::read(&path) {
            match serde_json::from_slice(&bytes) {
                Ok(v) => return Ok(v),
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        let value = compute()?;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let bytes = serde_json::to_vec(&value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(&path, bytes)?;
        Ok(value)
    }
}

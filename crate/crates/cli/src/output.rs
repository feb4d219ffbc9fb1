//! CSV tables and JSON manifests written into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of `name` inside the directory, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    /// Writes a table with a one-line header; numbers use the shortest
    /// round-trip representation and `None` becomes `NA`.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(
                row.iter()
                    .map(|v| v.map_or_else(|| "NA".to_string(), |x| x.to_string())),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<command>.json` with the config echo, its hash, the list of
    /// files written so far and `results`.
    pub fn manifest(
        mut self,
        command: &str,
        config: &Config,
        results: impl Serialize,
        wall_time: f64,
    ) -> Result<PathBuf> {
        let name = format!("{command}.json");
        let path = self.path(&name);
        let doc = json!({
            "command": command,
            "config_hash": config.hash(),
            "config": config,
            "files": self.written,
            "results": serde_json::to_value(results)?,
            "wall_time_seconds": wall_time,
        });
        fs::write(&path, to_pretty(&doc)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn to_pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

/// Non-finite numbers are not valid JSON; they become `null`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

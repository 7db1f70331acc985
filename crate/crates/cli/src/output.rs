use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Provenance block embedded in every JSON artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub max_words: u64,
}

pub struct Output {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl Output {
    pub fn new(dir: &Path, manifest: Manifest) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `{ "manifest": .., <body fields> }`.
    pub fn json(&self, name: &str, body: Value) -> Result<(), CliError> {
        let mut map = serde_json::Map::new();
        map.insert(
            "manifest".into(),
            serde_json::to_value(&self.manifest).expect("manifest serializes"),
        );
        match body {
            Value::Object(m) => map.extend(m),
            other => {
                map.insert("result".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(map)).expect("json serializes");
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    pub fn csv(
        &self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn header(fixed: &[&str], prefix: &str, d: usize) -> Vec<String> {
    let mut h: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|i| format!("{prefix}{i}")));
    h
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

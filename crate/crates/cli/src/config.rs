//! Optional TOML configuration file. Command-line flags override file
//! values; the file fills in whatever the flags leave unset.
//!
//! The cost-model block sits at the top level (`cost = "lev"`,
//! `epsilon = 0.001`, `eta = "auto"`, `erp_ref = "auto"`,
//! `neterp_del = 2.0`); paths and the threshold live in the `[paths]` and
//! `[query]` tables.

use std::path::PathBuf;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub cost: Option<String>,
    pub epsilon: Option<f64>,
    /// A number or "auto".
    pub eta: Option<toml::Value>,
    /// "lon,lat" or "auto".
    pub erp_ref: Option<String>,
    pub neterp_del: Option<f64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub query: QuerySection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub index: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySection {
    pub tau: Option<f64>,
    pub tau_ratio: Option<f64>,
    pub format: Option<String>,
}

pub fn load(path: Option<&PathBuf>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::config(format!("cannot read config {}: {e}", p.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::config(format!("bad config {}: {e}", p.display())))
        }
    }
}

impl FileConfig {
    pub fn eta_string(&self) -> Option<String> {
        self.eta.as_ref().map(|v| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }
}

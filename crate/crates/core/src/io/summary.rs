use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// `git describe` of the source tree at build time, or `"unknown"`.
pub const BUILD_DESCRIBE: &str = env!("FASTSVT_GIT_DESCRIBE");

/// Self-describing record of one run: the full config echo, metrics and timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub build: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub metrics: BTreeMap<String, Value>,
    pub timings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(RunSummary {
            command: command.to_string(),
            build: BUILD_DESCRIBE.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config).map_err(|e| Error::InvalidParameter(e.to_string()))?,
            metrics: BTreeMap::new(),
            timings: BTreeMap::new(),
            converged: None,
            warnings: Vec::new(),
        })
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    pub fn timing(&mut self, key: &str, secs: f64) {
        self.timings.insert(key.to_string(), secs);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

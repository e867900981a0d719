//! Experiment configuration: parsing, default resolution and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::catalog::{self, Entry};
use crate::error::{HarnessError, Result};

/// Seeds as an explicit list or as `count` consecutive values from `start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: usize },
}

impl SeedSpec {
    pub fn to_list(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { start, count } => (0..*count as u64).map(|i| start + i).collect(),
        }
    }
}

/// One numeric setting swept over sorted values. Each value produces one
/// block of rows, with the value in the first column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: String,
    pub values: Vec<f64>,
}

/// Configuration as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Catalog id, e.g. `"siso-gain-bounds"`.
    pub experiment: String,
    /// Experiment-specific settings; missing fields take catalog defaults.
    #[serde(default)]
    pub settings: Map<String, Value>,
    /// Defaults to the catalog's trial count starting at seed 0.
    #[serde(default)]
    pub seeds: Option<SeedSpec>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Where results go. Not part of the hash.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid config JSON: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A config with every default filled in and every field checked. Two
/// configs that resolve to the same value describe the same run.
#[derive(Clone, Serialize)]
pub struct Resolved {
    pub experiment: String,
    pub settings: Value,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub entry: &'static dyn Entry,
}

pub fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    let entry = catalog::find(&config.experiment).ok_or_else(|| {
        HarnessError::Config(format!(
            "unknown experiment id {:?}; known ids: {}",
            config.experiment,
            catalog::ids().join(", ")
        ))
    })?;
    let info = entry.info();
    let settings = entry.resolve(Value::Object(config.settings.clone()))?;
    let seeds = config.seeds.clone().unwrap_or(SeedSpec::Range { start: 0, count: info.default_trials }).to_list();
    if seeds.is_empty() {
        return Err(HarnessError::Config("the seed list is empty".into()));
    }
    if let Some(sw) = &config.sweep {
        if !info.sweep_variables.contains(&sw.variable.as_str()) {
            return Err(HarnessError::Config(format!(
                "experiment {} cannot sweep {:?}; sweepable settings: {}",
                info.id,
                sw.variable,
                info.sweep_variables.join(", ")
            )));
        }
        if sw.values.is_empty() {
            return Err(HarnessError::Config("sweep needs at least one value".into()));
        }
        if sw.values.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Config("sweep values must be finite".into()));
        }
        if sw.values.windows(2).any(|w| w[1] < w[0]) {
            return Err(HarnessError::Config("sweep values must be sorted ascending".into()));
        }
        // Every point must itself be a valid configuration.
        for &v in &sw.values {
            entry.resolve(with_setting(&settings, &sw.variable, v)?)?;
        }
    }
    Ok(Resolved { experiment: info.id.to_string(), settings, seeds, sweep: config.sweep.clone(), out: config.out.clone(), entry })
}

/// Copy of `settings` with one numeric field replaced. Integer fields
/// accept only integral values.
pub fn with_setting(settings: &Value, name: &str, v: f64) -> Result<Value> {
    let mut s = settings.clone();
    let obj = s.as_object_mut().ok_or_else(|| HarnessError::Config("settings must be an object".into()))?;
    let integral = matches!(obj.get(name), Some(Value::Number(n)) if n.is_u64() || n.is_i64());
    let new = if integral {
        if v.fract() != 0.0 || v < 0.0 {
            return Err(HarnessError::Config(format!("setting {name} takes non-negative integers, got {v}")));
        }
        Value::from(v as u64)
    } else {
        serde_json::Number::from_f64(v).map(Value::Number).ok_or_else(|| HarnessError::Config(format!("{v} is not finite")))?
    };
    obj.insert(name.to_string(), new);
    Ok(s)
}

impl Resolved {
    /// Hex SHA-256 of the canonical JSON (sorted keys, no whitespace) of the
    /// resolved config. The output path is excluded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("resolved config serializes"))
            .expect("JSON value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Seed of the trial labelled `index` in the seed list: the first eight
/// bytes, little endian, of `SHA-256(hash ‖ ":" ‖ index)`.
pub fn trial_seed(config_hash: &str, index: u64) -> u64 {
    let digest = Sha256::digest(format!("{config_hash}:{index}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

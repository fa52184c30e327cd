//! The single TOML file that drives every command.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dualtake::eval::ModelsConfig;
use dualtake::pipeline::PipelineConfig;
use dualtake::synth::CohortConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Directory under `--out` that receives the evaluation report.
    pub output: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: 5, seeds: vec![1, 2, 3, 4, 5], output: "report".to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cohort: CohortConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Keys every config must spell out; everything else has a default.
pub const REQUIRED_KEYS: [&str; 2] = ["cohort.n_participants", "cohort.seed"];

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(e.message().to_string()))?;
    for key in REQUIRED_KEYS {
        let mut node = Some(&value);
        let mut found = false;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            match node.and_then(|n| n.get(*part)) {
                Some(v) if i + 1 == parts.len() => found = !v.is_table(),
                Some(toml::Value::Table(t)) => node = Some(t),
                _ => break,
            }
        }
        if !found {
            return Err(config_error(format!("missing required key `{key}`")));
        }
    }
    let de = toml::Deserializer::new(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(format!("at `{path}`: {}", e.inner().message()))
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Defaults everywhere except the required keys.
    pub fn new(n_participants: u32, seed: u64) -> Self {
        Self {
            cohort: CohortConfig { n_participants, seed, ..CohortConfig::default() },
            pipeline: PipelineConfig::default(),
            models: ModelsConfig::default(),
            eval: EvalConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |section: &str, e: dualtake::Error| config_error(format!("in `{section}`: {e}"));
        self.cohort.validate().map_err(|e| wrap("cohort", e))?;
        self.pipeline.window.validate().map_err(|e| wrap("pipeline.window", e))?;
        if !(self.pipeline.sync_rate > 0.0) || !(self.pipeline.max_gap >= 0.0) {
            return Err(config_error("in `pipeline`: sync_rate must be positive and max_gap non-negative"));
        }
        self.models.validate().map_err(|e| wrap("models", e))?;
        if self.eval.k < 2 || self.eval.k > self.cohort.n_participants as usize {
            return Err(config_error("in `eval`: k must lie in [2, n_participants]"));
        }
        if self.eval.seeds.is_empty() {
            return Err(config_error("in `eval`: seeds must not be empty"));
        }
        let too_big = |s: u64| s > i64::MAX as u64;
        if too_big(self.cohort.seed) || self.eval.seeds.iter().any(|&s| too_big(s)) {
            return Err(config_error("seeds must fit in a signed 64-bit integer"));
        }
        let out = &self.eval.output;
        if out.is_empty() || out.contains(['/', '\\']) || out.starts_with('.') {
            return Err(config_error("in `eval`: output must be a plain directory name"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| config_error(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> Result<String, CliError> {
        let canonical = self.to_toml()?;
        let hash = Sha256::digest(canonical.as_bytes());
        Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
    }
}

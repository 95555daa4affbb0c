//! Run configuration, read from TOML. Every field has a default, so a
//! config file only lists what it changes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use treemath_model::{Ablation, ModelConfig, OptimConfig, TrainConfig};

use crate::error::CliError;

/// How the vocabulary is built at ingest time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub max_words: usize,
    pub min_count: usize,
    /// Multi-digit numbers kept as single tokens when number sub-trees
    /// are disabled.
    pub max_numbers: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            max_words: 2000,
            min_count: 2,
            max_numbers: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub beam: usize,
    pub max_len: usize,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        GenerateSettings { beam: 3, max_len: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub optim: OptimConfig,
    pub train: TrainConfig,
    pub ablation: Ablation,
    pub data: DataConfig,
    pub generate: GenerateSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::desk(),
            optim: OptimConfig::default(),
            train: TrainConfig::default(),
            ablation: Ablation::default(),
            data: DataConfig::default(),
            generate: GenerateSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::User(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&raw).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
    }

    pub fn parse(raw: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(raw)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `section.key=value`, where the value is TOML (a bare word is
    /// taken as a string).
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let user = |m: String| CliError::User(format!("--set {assignment}: {m}"));
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| user("expected key=value".into()))?;
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_owned()),
        };
        let mut root = toml::Value::try_from(&*self).map_err(|e| user(e.to_string()))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        let (last, parents) = path.split_last().expect("split yields one item");
        let mut table = root.as_table_mut().expect("config is a table");
        for p in parents {
            table = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| user(format!("{p} is not a section")))?;
        }
        table.insert(last.to_string(), value);
        *self = root.try_into().map_err(|e: toml::de::Error| user(e.message().to_owned()))?;
        Ok(())
    }

    /// Sets the initialization and shuffling seeds together.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.model.seed = seed;
        self.train.seed = seed;
        self
    }
}

//! Run configuration files.
//!
//! A config file is flat TOML: one `key = value` per line, `#` comments.
//! Keys are the fields of the model and training configs; anything left
//! out keeps its default. Unknown keys are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tigt_core::model::TigtConfig;
use tigt_core::train::TrainConfig;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: TigtConfig,
    pub train: TrainConfig,
}

fn field_names<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn pick<T: DeserializeOwned>(table: &toml::Table, keys: &[String]) -> Result<T, CliError> {
    let subset: toml::Table = table.iter().filter(|(k, _)| keys.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    toml::Value::Table(subset).try_into().map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))?;
    let model_keys = field_names::<TigtConfig>();
    let train_keys = field_names::<TrainConfig>();
    if let Some(k) = table.keys().find(|k| !model_keys.contains(k) && !train_keys.contains(k)) {
        return Err(CliError::Usage(format!("config: unknown key `{k}`")));
    }
    Ok(RunConfig { model: pick(&table, &model_keys)?, train: pick(&table, &train_keys)? })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

//! JSON run configurations merged under command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub key: String,
    pub file: Value,
    pub flag: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub file: Option<String>,
    pub conflicts: Vec<Conflict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<&'static str>,
}

/// Reads a config object; a `command` key, if present, must name `command`.
pub fn load_config(path: &Path, command: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("config-missing", format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::usage("config-parse", format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    let Value::Object(mut map) = value else {
        return Err(CliError::usage("config-parse", format!("{}: top level must be an object", path.display())));
    };
    if let Some(c) = map.remove("command") {
        if c != Value::String(command.to_string()) {
            return Err(CliError::usage(
                "config-command",
                format!("{}: config is for {c}, not {command:?}", path.display()),
            ));
        }
    }
    Ok(map)
}

/// Flags win over file values; differing pairs are reported as conflicts.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    file: Option<Map<String, Value>>,
    path: Option<&Path>,
) -> Result<(T, Vec<Conflict>), CliError> {
    let Value::Object(mut merged) = serde_json::to_value(flags).expect("flag struct serializes") else {
        unreachable!("flag structs serialize to objects")
    };
    let mut conflicts = Vec::new();
    for (key, file_value) in file.unwrap_or_default() {
        match merged.get(&key) {
            None => {
                return Err(CliError::usage(
                    "config-parse",
                    format!("{}: unknown key {key:?}", path.map(|p| p.display().to_string()).unwrap_or_default()),
                ))
            }
            Some(Value::Null) => {
                merged.insert(key, file_value);
            }
            Some(flag) => {
                if *flag != file_value && !file_value.is_null() {
                    conflicts.push(Conflict { key, file: file_value, flag: flag.clone() });
                }
            }
        }
    }
    let resolved = serde_json::from_value(Value::Object(merged)).map_err(|e| {
        CliError::usage("config-parse", format!("{}: {e}", path.map(|p| p.display().to_string()).unwrap_or_default()))
    })?;
    Ok((resolved, conflicts))
}

//! Flag defaults from `$DECOLAB_CONFIG/<subcommand>.json`; explicit flags win.

use crate::error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

pub const CONFIG_ENV: &str = "DECOLAB_CONFIG";

pub fn config_root() -> Option<PathBuf> {
    std::env::var_os(CONFIG_ENV).map(PathBuf::from)
}

/// Overlays the non-null fields of `flags` on the config file for `subcommand`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, subcommand: &str, root: Option<&Path>) -> CliResult<T> {
    let Some(root) = root else { return Ok(flags) };
    let path = root.join(format!("{subcommand}.json"));
    if !path.exists() {
        return Ok(flags);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut base: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let Value::Object(base_map) = &mut base else {
        return Err(CliError::Input(format!("{}: expected a JSON object", path.display())));
    };
    let Value::Object(flag_map) = serde_json::to_value(&flags)? else {
        return Err(CliError::Input("flags do not serialize to an object".into()));
    };
    for key in base_map.keys() {
        if !flag_map.contains_key(key) {
            return Err(CliError::Input(format!("{}: unknown key {key:?}", path.display())));
        }
    }
    for (k, v) in flag_map {
        if !v.is_null() {
            base_map.insert(k, v);
        }
    }
    let merged: T = serde_json::from_value(base).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(merged)
}

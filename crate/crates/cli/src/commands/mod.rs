pub mod analyze;
pub mod ct;
pub mod study;
pub mod synth;

use crate::error::CliError;
use std::path::Path;

/// Reads a JSON config file into a generic value, or an empty object.
pub fn read_config(path: Option<&Path>) -> Result<serde_json::Map<String, serde_json::Value>, CliError> {
    let Some(path) = path else {
        return Ok(serde_json::Map::new());
    };
    crate::error::require_file(path, "config file")?;
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str(&text) {
        Ok(serde_json::Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::input("MalformedJson", format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::input("MalformedJson", format!("{}: {e}", path.display()))),
    }
}

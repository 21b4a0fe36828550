use std::fs;
use std::path::Path;

use serde_json::{Map, Value};
use srpctl_core::simulation::Scenario;

use crate::CliError;

/// Reads a scenario file (or starts from the defaults when `path` is `None`),
/// applies `key=value` overrides and validates the result.
pub fn load_scenario(path: Option<&Path>, overrides: &[String]) -> Result<Scenario, CliError> {
    let mut tree = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !tree.is_object() {
        return Err(CliError::Input("scenario must be a JSON object".into()));
    }
    let defaults = serde_json::to_value(Scenario::default()).expect("default scenario serializes");
    for item in overrides {
        apply_override(&mut tree, item, &defaults)?;
    }
    let scenario: Scenario = serde_json::from_value(tree).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
    scenario.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(scenario)
}

/// `key=value` with a dotted key path. The value is read as JSON when it
/// parses and as a plain string otherwise, so `method=lqr` and
/// `horizon=200` both work. An object on the path that the tree lacks is
/// copied from `defaults`, so `spacecraft.mass=800` keeps the other
/// spacecraft fields.
pub fn apply_override(tree: &mut Value, item: &str, defaults: &Value) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("override `{item}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Input(format!("override key `{key}` is empty or malformed")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = tree;
    let mut fallback = Some(defaults);
    for part in &path[..path.len() - 1] {
        fallback = fallback.and_then(|d| d.get(part));
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Input(format!("override `{key}` descends into a non-object")))?;
        node = map.entry(part.to_string()).or_insert_with(|| match fallback {
            Some(d) if d.is_object() => d.clone(),
            _ => Value::Object(Map::new()),
        });
    }
    let map = node
        .as_object_mut()
        .ok_or_else(|| CliError::Input(format!("override `{key}` descends into a non-object")))?;
    map.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

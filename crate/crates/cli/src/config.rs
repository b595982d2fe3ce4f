//! JSON config files layered under command-line flags.
//!
//! A config file holds one object whose keys are the long flag names of the
//! subcommand being run; flag groups (geometry, model, solver) nest as
//! objects. Flags given on the command line win over file values.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("config: cannot read {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("config: {} is not valid JSON", path.display()))?;
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("config: {} must contain a JSON object", path.display()),
    }
}

/// Merges `flags` over `file` and returns the combined settings.
pub fn resolve<T>(flags: &T, file: Option<&Map<String, Value>>) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let known = serde_json::to_value(T::default())?;
    let mut merged = Value::Object(file.cloned().unwrap_or_default());
    check_known(&known, &merged, "")?;
    overlay(&mut merged, serde_json::to_value(flags)?);
    serde_path_to_error::deserialize(merged).map_err(|e| anyhow!("config: {}: {}", e.path(), e.inner()))
}

fn check_known(known: &Value, given: &Value, prefix: &str) -> Result<()> {
    let (Value::Object(known), Value::Object(given)) = (known, given) else {
        return Ok(());
    };
    for (key, value) in given {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match known.get(key) {
            None => bail!("config: unknown field `{path}`"),
            Some(inner @ Value::Object(_)) => {
                if !value.is_object() {
                    bail!("config: {path}: expected an object");
                }
                check_known(inner, value, &path)?;
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Copies every non-null leaf of `top` into `base`.
fn overlay(base: &mut Value, top: Value) {
    let Value::Object(top) = top else { return };
    if !base.is_object() {
        *base = Value::Object(Map::new());
    }
    let Value::Object(base) = base else { unreachable!() };
    for (key, value) in top {
        match value {
            Value::Null => {}
            Value::Object(_) => overlay(base.entry(key).or_insert(Value::Null), value),
            leaf => {
                base.insert(key, leaf);
            }
        }
    }
}

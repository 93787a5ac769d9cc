use serde_json::Value;

use super::{ScenarioConfig, ScenarioError};

/// One `--vary` axis: a dotted path into the config document and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

fn usage(message: String) -> ScenarioError {
    ScenarioError::Config {
        location: "--vary".into(),
        message,
    }
}

fn parse_scalar(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

impl SweepAxis {
    /// Parses `model.gamma=5,20,80`. Values are read as JSON, else as strings.
    pub fn parse(spec: &str) -> Result<Self, ScenarioError> {
        let (path, list) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("`{spec}` is not of the form key=v1,v2,...")))?;
        let path = path.trim();
        if path.is_empty() || path.split('.').any(str::is_empty) {
            return Err(usage(format!("bad key `{path}`")));
        }
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(parse_scalar)
            .collect();
        if values.is_empty() {
            return Err(usage(format!("no values given for `{path}`")));
        }
        Ok(SweepAxis {
            path: path.to_string(),
            values,
        })
    }
}

/// Sets the value at a dotted path. A misspelled leaf key surfaces when the
/// document is parsed back.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), ScenarioError> {
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    for key in parents {
        node = node
            .get_mut(*key)
            .ok_or_else(|| usage(format!("`{path}`: no key `{key}` in the config")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| usage(format!("`{path}`: parent is not an object")))?;
    obj.insert(last.to_string(), value);
    Ok(())
}

/// Every combination of axis values, first axis varying slowest.
pub fn cartesian(axes: &[SweepAxis]) -> Vec<Vec<(String, Value)>> {
    let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push((axis.path.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    combos
}

fn label(assignments: &[(String, Value)]) -> String {
    assignments
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join("_")
}

/// Applies one combination to `base`; the result is re-validated and renamed.
pub fn with_overrides(base: &ScenarioConfig, assignments: &[(String, Value)]) -> Result<ScenarioConfig, ScenarioError> {
    let mut doc = serde_json::to_value(base).map_err(|source| ScenarioError::Json {
        path: base.name.clone(),
        source,
    })?;
    for (path, v) in assignments {
        set_path(&mut doc, path, v.clone())?;
    }
    let tag = label(assignments);
    let mut cfg = ScenarioConfig::from_json_value(doc, &tag)?;
    if !tag.is_empty() {
        cfg.name = format!("{}_{tag}", base.name);
    }
    Ok(cfg)
}

/// Directory-safe variant of a sweep member's name.
pub fn dir_name(cfg: &ScenarioConfig) -> String {
    cfg.name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.=".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

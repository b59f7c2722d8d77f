//! Report envelope, finiteness guard and CSV rendering.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
pub struct Report<'a, P: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub provenance: P,
    pub result: R,
}

/// Serialized options are skipped when absent, so a `null` can only come from a
/// non-finite float.
fn first_null(value: &Value, path: &str) -> Option<String> {
    match value {
        Value::Null => Some(path.to_string()),
        Value::Array(items) => items.iter().enumerate().find_map(|(k, v)| first_null(v, &format!("{path}[{k}]"))),
        Value::Object(map) => map.iter().find_map(|(k, v)| {
            let child = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            first_null(v, &child)
        }),
        _ => None,
    }
}

pub fn to_value<T: Serialize>(report: &T) -> Result<Value, String> {
    let value = serde_json::to_value(report).map_err(|e| e.to_string())?;
    match first_null(&value, "") {
        Some(path) => Err(format!("non-finite value in report at `{path}`")),
        None => Ok(value),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects and arrays into `a.b[0]`-style keys.
pub fn flatten(value: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(v, &key, out);
            }
        }
        Value::Array(items) => {
            for (k, v) in items.iter().enumerate() {
                flatten(v, &format!("{prefix}[{k}]"), out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

/// `# key=value` provenance lines followed by the table.
pub fn csv_document(envelope: &Value, table: &[Vec<String>]) -> String {
    let mut header = Vec::new();
    for key in ["command", "version", "provenance"] {
        if let Some(v) = envelope.get(key) {
            flatten(v, key, &mut header);
        }
    }
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for row in table {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A `key,value` table for results without a natural tabular shape.
pub fn key_value_table(result: &Value) -> Vec<Vec<String>> {
    let mut pairs = Vec::new();
    flatten(result, "", &mut pairs);
    let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
    rows.extend(pairs.into_iter().map(|(k, v)| vec![k, v]));
    rows
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_is_reported_with_its_path() {
        #[derive(Serialize)]
        struct Inner {
            v: Vec<f64>,
        }
        let err = to_value(&Inner { v: vec![1.0, f64::NAN] }).unwrap_err();
        assert!(err.contains("v[1]"), "{err}");
        assert!(to_value(&Inner { v: vec![1.0] }).is_ok());
    }

    #[test]
    fn flattening_names_nested_keys() {
        let v = serde_json::json!({"a": {"b": [1, 2]}, "c": "x"});
        let mut out = Vec::new();
        flatten(&v, "", &mut out);
        assert_eq!(out, vec![("a.b[0]".into(), "1".into()), ("a.b[1]".into(), "2".into()), ("c".into(), "x".into())]);
    }
}

//! Path-reporting structural checks over JSON values. Serde reports line and
//! column; callers want the JSON path of the offending field.

use alloc::format;
use alloc::string::{String, ToString};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub(crate) fn err(path: &str, reason: impl Into<String>) -> Error {
    Error::Schema { path: path.to_string(), reason: reason.into() }
}

pub(crate) fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected object"))
}

/// Checks required and optional keys; anything else is rejected.
pub(crate) fn keys(m: &Map<String, Value>, path: &str, required: &[&str], optional: &[&str]) -> Result<()> {
    for k in required {
        if !m.contains_key(*k) {
            return Err(err(&format!("{path}.{k}"), "missing field"));
        }
    }
    for k in m.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(err(&format!("{path}.{k}"), "unknown field"));
        }
    }
    Ok(())
}

pub(crate) fn string(m: &Map<String, Value>, path: &str, key: &str) -> Result<()> {
    match m.get(key) {
        Some(Value::String(_)) | None => Ok(()),
        Some(_) => Err(err(&format!("{path}.{key}"), "expected string")),
    }
}

pub(crate) fn array<'a>(m: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a [Value]> {
    match m.get(key) {
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(err(&format!("{path}.{key}"), "expected array")),
        None => Ok(&[]),
    }
}

pub(crate) fn string_array(m: &Map<String, Value>, path: &str, key: &str) -> Result<()> {
    for (i, v) in array(m, path, key)?.iter().enumerate() {
        if !v.is_string() {
            return Err(err(&format!("{path}.{key}[{i}]"), "expected string"));
        }
    }
    Ok(())
}

pub(crate) fn number_pair(m: &Map<String, Value>, path: &str, key: &str, integer: bool) -> Result<()> {
    let Some(v) = m.get(key) else { return Ok(()) };
    let p = format!("{path}.{key}");
    let a = v.as_array().ok_or_else(|| err(&p, "expected [min, max]"))?;
    if a.len() != 2 {
        return Err(err(&p, "expected exactly two numbers"));
    }
    for (i, x) in a.iter().enumerate() {
        let ok = if integer { x.as_u64().is_some() } else { x.as_f64().is_some() };
        if !ok {
            let what = if integer { "expected non-negative integer" } else { "expected number" };
            return Err(err(&format!("{p}[{i}]"), what));
        }
    }
    Ok(())
}

pub(crate) fn decode<T: serde::de::DeserializeOwned>(v: Value, path: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| err(path, e.to_string()))
}

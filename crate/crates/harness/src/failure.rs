use serde::Serialize;
use serde_json::{json, Value};

/// An operation error as printed on stderr: `{code, message, context}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub context: Value,
}

pub type Result<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into(), context: json!({}) }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        if let Value::Object(m) = &mut self.context {
            m.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("failures serialize")
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for Failure {}

impl From<tabletop_core::Error> for Failure {
    fn from(e: tabletop_core::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new("io_error", e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::new("schema_error", e.to_string())
    }
}

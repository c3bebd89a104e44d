use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The document does not match the schema; `path` is dotted, empty for
    /// the document root.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("sweep point {index}: {source}")]
    Experiment {
        index: usize,
        #[source]
        source: fluxcouple::Error,
    },
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        let (mut path, message) = (path.into(), message.into());
        if let Some(field) = message.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            if !path.ends_with(field) {
                path = if path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
            }
        }
        CliError::Schema { path, message }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn prefixed(self, prefix: &str) -> Self {
        match self {
            CliError::Schema { path, message } if path.is_empty() => CliError::Schema {
                path: prefix.to_string(),
                message,
            },
            CliError::Schema { path, message } => CliError::Schema {
                path: format!("{prefix}.{path}"),
                message,
            },
            other => other,
        }
    }

    /// Field path of a schema error.
    pub fn path(&self) -> Option<&str> {
        match self {
            CliError::Schema { path, .. } => Some(path),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Experiment { .. } => 1,
            CliError::Schema { .. } | CliError::Io { .. } => 2,
        }
    }

    /// The error record written to stderr.
    pub fn record(&self) -> Value {
        let body = match self {
            CliError::Schema { path, message } => json!({"kind": "schema", "path": path, "message": message}),
            CliError::Io { path, message } => json!({"kind": "io", "path": path, "message": message}),
            CliError::Experiment { index, source } => {
                json!({"kind": "experiment", "point": index, "message": source.to_string()})
            }
        };
        json!({ "error": body })
    }
}

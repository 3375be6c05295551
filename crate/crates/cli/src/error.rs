use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Engine(#[from] drh::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Engine(_) => 4,
        }
    }

    pub fn report(&self) -> Value {
        let kind = match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Engine(_) => "engine",
        };
        let mut v = json!({ "status": "error", "kind": kind, "message": self.to_string() });
        if let CliError::Config { field, .. } = self {
            v["field"] = json!(field);
        }
        v
    }
}

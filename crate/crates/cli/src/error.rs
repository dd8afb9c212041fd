use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("solver {solver} failed: {source}")]
    Solver { solver: &'static str, source: condex_core::Error },

    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("unknown bundled scenario {0:?}")]
    UnknownScenario(String),
}

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config { path: path.to_string(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Config { .. } => "config",
            CliError::Solver { .. } => "solver",
            CliError::Io { .. } => "io",
            CliError::UnknownScenario(_) => "unknown_scenario",
        }
    }

    /// Machine-readable error block for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut block = json!({ "kind": self.kind(), "message": self.to_string() });
        match self {
            CliError::Parse { line, column, .. } => {
                block["line"] = json!(line);
                block["column"] = json!(column);
            }
            CliError::Solver { solver, source } => {
                block["solver"] = json!(solver);
                block["detail"] = json!(format!("{source:?}"));
            }
            _ => {}
        }
        json!({ "error": block })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

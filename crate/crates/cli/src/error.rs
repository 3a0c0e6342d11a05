use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input file not found: {}", path.display())]
    MissingInput { path: PathBuf },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}{source}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Module { path: Option<PathBuf>, source: geoprobe_core::Error },
    #[error("manifest check failed: {0}")]
    Verify(String),
}

impl CliError {
    /// Usage-level problems exit with 2, everything raised while running a
    /// stage exits with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput { .. } | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::MissingInput { .. } => "missing_input",
            CliError::Config(_) => "invalid_config",
            CliError::Io { .. } => "io",
            CliError::Module { .. } => "module",
            CliError::Verify(_) => "verify",
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            CliError::MissingInput { path } | CliError::Io { path, .. } => Some(path),
            CliError::Module { path, .. } => path.as_deref(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "path": self.path().map(|p| p.display().to_string()),
                "exit_code": self.exit_code(),
            }
        })
    }
}

impl From<geoprobe_core::Error> for CliError {
    fn from(source: geoprobe_core::Error) -> Self {
        CliError::Module { path: None, source }
    }
}

/// Attaches the offending file to a library error.
pub fn at<E: Into<geoprobe_core::Error>>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Module { path: Some(path.to_path_buf()), source: e.into() }
}

pub fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub type CliResult<T> = Result<T, CliError>;

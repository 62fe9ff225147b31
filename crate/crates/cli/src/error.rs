use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("acceptance failure: {0}")]
    Acceptance(String),
}

impl CliError {
    /// Process exit status: 2 config/input, 3 numerical, 4 acceptance.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingArtifact(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingArtifact(_) => "missing_artifact",
            CliError::Io { .. } => "io",
            CliError::Numerical(_) => "numerical",
            CliError::Acceptance(_) => "acceptance",
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Machine-readable failure record written next to the artifacts.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub command: &'a str,
    pub kind: &'a str,
    pub exit_code: i32,
    pub message: String,
}

impl<'a> ErrorReport<'a> {
    pub fn new(command: &'a str, e: &CliError) -> Self {
        ErrorReport { command, kind: e.kind(), exit_code: e.exit_code(), message: e.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes") + "\n"
    }
}

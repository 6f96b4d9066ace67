//! Batch experiment runner for the conferencing FSM-MAC computations in
//! [`confmac_core`]: TOML configs in, CSV tables and SVG plots out.

pub mod config;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use experiments::{run, validate, Experiment, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Compute(#[from] confmac_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Compute(_) => "compute",
        }
    }

    /// One-line JSON for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({ "status": "error", "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}

/// Files written by one run, in write order.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    /// Human-readable notes (e.g. points that hit the solver budget).
    pub notes: Vec<String>,
}

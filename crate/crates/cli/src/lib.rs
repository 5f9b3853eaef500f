//! Experiment runner: configuration, resumable runs over the transcript
//! cache, reports and per-record audits.

pub mod audit;
pub mod config;
pub mod layout;
pub mod pipeline;
pub mod report;

use std::path::Path;

use thiserror::Error;

pub use audit::audit;
pub use config::{RunConfig, SettingEntry};
pub use layout::RunDir;
pub use pipeline::{gen, run, score, Manifest, RunOptions, RunOutcome};
pub use report::write_reports;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unreadable run file: {0}")]
    Corrupt(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Prompt(#[from] rulegen_gateway::PromptError),
    #[error("no record {0} in this run")]
    UnknownRecord(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

//! Experiment runner: TOML configurations, named presets, and run
//! directories holding `config.json`, `traces.csv` and `summary.json`.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use runner::{execute, execute_with, run_experiment, run_experiment_with, ExpertCache, Outcome, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ilarl_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

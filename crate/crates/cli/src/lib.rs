//! Experiment harness for `akpz-core`: configuration parsing, the
//! acceptance recipes, comparison reports and CSV output.

pub mod config;
pub mod outputs;
pub mod recipes;
pub mod report;

pub use config::{parse_config, ConfigError, Experiment, ExperimentConfig};
pub use recipes::run_experiment;
pub use report::{ComparisonReport, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] akpz_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status: 2 for usage and configuration problems, 1 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        use akpz_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(E::Parameter(_) | E::Parse(_) | E::Configuration(_) | E::Domain(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

/// Writes `contents` to `path`, mapping the error.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
